#![allow(dead_code)]

use dgat_core::nn::{backward, cross_entropy, forward, GraphInput, Model, ModelConfig};
use dgat_core::spectral::{eigendecompose, LaplacianParams, DEFAULT_EPS0};
use dgat_core::synth::{generate, NodeDataset, SynthConfig};
use dgat_core::{build_graph, Graph};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random spanning tree plus independent extra edges.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.random_range(0..i), i));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(extra) {
                edges.push((u, v));
            }
        }
    }
    build_graph(n, &edges).unwrap()
}

pub fn gradient_instance() -> (NodeDataset, GraphInput) {
    let d = generate(&SynthConfig {
        n: 20,
        classes: 4,
        mu: 0.3,
        feature_dim: 3,
        seed: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    let b = eigendecompose(&d.graph, LaplacianParams::random_walk(0.5).unwrap()).unwrap();
    let input = GraphInput::with_signal(&d.graph, &b.phi1, DEFAULT_EPS0).unwrap();
    (d, input)
}

fn loss(model: &Model, d: &NodeDataset, input: &GraphInput) -> f64 {
    let f = forward(model, &d.features, input, None).unwrap();
    cross_entropy(&f.logits, &d.labels, &d.split.train)
        .unwrap()
        .0
}

fn tensor_mut<'a>(m: &'a mut Model, layer: usize, name: &str) -> &'a mut Array2<f64> {
    m.layers[layer]
        .tensors_mut()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| t)
        .unwrap()
}

fn norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative error `|g - g_fd| / max(|g|, |g_fd|)` of every tensor against
/// central differences, with Euclidean norms over the whole tensor.
pub fn gradient_errors(
    cfg: ModelConfig,
    d: &NodeDataset,
    input: &GraphInput,
    step: f64,
) -> Vec<(String, f64)> {
    let model = Model::init(cfg, 42).unwrap();
    let f = forward(&model, &d.features, input, None).unwrap();
    let (_, dl) = cross_entropy(&f.logits, &d.labels, &d.split.train).unwrap();
    let grads = backward(&model, input, &f, &dl).unwrap();
    let mut errors = Vec::new();
    for (l, g) in grads.iter().enumerate() {
        for (name, analytic) in g.tensors() {
            let mut numeric = Array2::<f64>::zeros(analytic.raw_dim());
            for idx in ndarray::indices(analytic.raw_dim()) {
                let mut plus = model.clone();
                tensor_mut(&mut plus, l, name)[idx] += step;
                let mut minus = model.clone();
                tensor_mut(&mut minus, l, name)[idx] -= step;
                numeric[idx] = (loss(&plus, d, input) - loss(&minus, d, input)) / (2.0 * step);
            }
            let scale = norm(analytic).max(norm(&numeric));
            let rel = if scale == 0.0 {
                0.0
            } else {
                norm(&(analytic - &numeric)) / scale
            };
            errors.push((format!("layer {l} {name}"), rel));
        }
    }
    errors
}

/// Ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && x[order[end + 1]] == x[order[k]] {
            end += 1;
        }
        let r = (k + end) as f64 / 2.0 + 1.0;
        for &i in &order[k..=end] {
            ranks[i] = r;
        }
        k = end + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
