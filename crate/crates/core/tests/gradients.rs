use dgat_core::nn::{
    backward, cross_entropy, forward, Aggregation, AttentionMode, GraphInput, Model, ModelConfig,
};
use dgat_core::spectral::DEFAULT_EPS0;

mod common;

use common::{gradient_errors, gradient_instance as instance};

const STEP: f64 = 1e-3;
const TOL: f64 = 1e-4;

#[test]
fn gradients_match_central_differences() {
    let (d, input) = instance();
    for mode in [AttentionMode::Gat, AttentionMode::Dgat] {
        for aggregation in [Aggregation::Plain, Aggregation::Sep] {
            for layers in [1, 2] {
                for heads in [1, 2] {
                    let cfg = ModelConfig {
                        layers,
                        heads,
                        hidden: 3,
                        dropout: 0.0,
                        ..ModelConfig::new(mode, aggregation, 3, 4)
                    };
                    for (name, rel) in gradient_errors(cfg, &d, &input, STEP) {
                        assert!(
                            rel < TOL,
                            "{mode}/{aggregation:?}/{layers} layers/{heads} heads: {name} relative error {rel:.2e}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn edge_weights_get_zero_gradient_without_edge_signal() {
    let (d, _) = instance();
    let flat = GraphInput::with_signal(&d.graph, &vec![1.0; d.n()], DEFAULT_EPS0).unwrap();
    let cfg = ModelConfig {
        dropout: 0.0,
        ..ModelConfig::new(AttentionMode::Dgat, Aggregation::Plain, 3, 4)
    };
    let model = Model::init(cfg, 1).unwrap();
    let f = forward(&model, &d.features, &flat, None).unwrap();
    let (_, dl) = cross_entropy(&f.logits, &d.labels, &d.split.train).unwrap();
    for g in backward(&model, &flat, &f, &dl).unwrap() {
        assert!(g.w_edge.unwrap().iter().all(|&x| x == 0.0));
        assert!(g.att_edge.unwrap().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn logit_gradient_matches_softmax_identity() {
    let (d, input) = instance();
    let model = Model::init(
        ModelConfig::new(AttentionMode::Dgat, Aggregation::Plain, 3, 4),
        3,
    )
    .unwrap();
    let logits = forward(&model, &d.features, &input, None).unwrap().logits;
    let (_, grad) = cross_entropy(&logits, &d.labels, &d.split.train).unwrap();
    let t = d.split.train.len() as f64;
    let mut train = vec![false; d.n()];
    for &i in &d.split.train {
        train[i] = true;
    }
    for i in 0..d.n() {
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
        for k in 0..4 {
            let want = if train[i] {
                let y = (row[k] - max).exp() / z;
                (y - f64::from(u8::from(d.labels[i] == k))) / t
            } else {
                0.0
            };
            assert!((grad[[i, k]] - want).abs() < 1e-10);
        }
    }
    // Numerically too.
    for &(i, k) in &[(d.split.train[0], 0), (d.split.train[1], 2)] {
        let h = 1e-5;
        let mut p = logits.clone();
        p[[i, k]] += h;
        let mut m = logits.clone();
        m[[i, k]] -= h;
        let fd = (cross_entropy(&p, &d.labels, &d.split.train).unwrap().0
            - cross_entropy(&m, &d.labels, &d.split.train).unwrap().0)
            / (2.0 * h);
        assert!((fd - grad[[i, k]]).abs() < 1e-9);
    }
}
