use ndarray::{Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::GraphInput;
use super::layer::LayerParams;
use super::model::{backward, forward, Model, ModelConfig};
use super::{Aggregation, AttentionMode};
use crate::error::{Error, Result};
use crate::synth::NodeDataset;

const DROPOUT_STREAM: u64 = 100;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Mean cross-entropy over `nodes` and its gradient with respect to the logits.
pub fn cross_entropy(
    logits: &Array2<f64>,
    labels: &[usize],
    nodes: &[usize],
) -> Result<(f64, Array2<f64>)> {
    if nodes.is_empty() {
        return Err(Error::Precondition("empty training mask".into()));
    }
    if labels.len() != logits.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            logits.nrows()
        )));
    }
    let scale = 1.0 / nodes.len() as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for &i in nodes {
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        loss -= row[labels[i]] - lse;
        for (k, &x) in row.iter().enumerate() {
            grad[[i, k]] = (x - lse).exp() * scale;
        }
        grad[[i, labels[i]]] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Share of `nodes` whose highest logit (lowest index on ties) is the label.
/// Zero for an empty node list.
pub fn accuracy(logits: &Array2<f64>, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let hits = nodes
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best == labels[i]
        })
        .count();
    hits as f64 / nodes.len() as f64
}

/// Accuracy of `model` on `nodes` without dropout.
pub fn evaluate(
    model: &Model,
    dataset: &NodeDataset,
    input: &GraphInput,
    nodes: &[usize],
) -> Result<f64> {
    let f = forward(model, &dataset.features, input, None)?;
    Ok(accuracy(&f.logits, &dataset.labels, nodes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: AttentionMode,
    pub aggregation: Aggregation,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub steps: usize,
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    pub leaky_slope: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: AttentionMode::Dgat,
            aggregation: Aggregation::Plain,
            learning_rate: 0.01,
            weight_decay: 0.001,
            dropout: 0.1,
            steps: 1000,
            layers: 2,
            heads: 8,
            hidden: 8,
            leaky_slope: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight decay {}",
                self.weight_decay
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be positive".into()));
        }
        Ok(())
    }

    pub fn model_config(&self, in_dim: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            layers: self.layers,
            heads: self.heads,
            hidden: self.hidden,
            leaky_slope: self.leaky_slope,
            dropout: self.dropout,
            ..ModelConfig::new(self.mode, self.aggregation, in_dim, num_classes)
        }
    }
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<LayerParams>,
    pub v: Vec<LayerParams>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &Model) -> Self {
        let zeros: Vec<LayerParams> = model.layers.iter().map(LayerParams::zeros_like).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    /// One Adam step with decoupled weight decay.
    pub fn update(&mut self, model: &mut Model, grads: &[LayerParams], lr: f64, weight_decay: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for (((p, g), m), v) in model
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let tensors = p.tensors_mut().into_iter().zip(g.tensors());
            for (((_, theta), (_, grad)), ((_, m), (_, v))) in
                tensors.zip(m.tensors_mut().into_iter().zip(v.tensors_mut()))
            {
                Zip::from(theta)
                    .and(grad)
                    .and(m)
                    .and(v)
                    .for_each(|theta, &g, m, v| {
                        *m = BETA1 * *m + (1.0 - BETA1) * g;
                        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *theta -= lr * (m_hat / (v_hat.sqrt() + ADAM_EPS) + weight_decay * *theta);
                    });
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub model: Model,
    pub adam: AdamState,
}

/// Metrics after optimizer step `step` (1-based). `train_loss` is the loss
/// of the dropout forward pass that produced the step's gradient; the other
/// fields come from a dropout-free pass with the updated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub steps: Vec<StepRecord>,
    /// Highest validation accuracy, ties broken by lower validation loss,
    /// then by the earlier step.
    pub best_step: usize,
    pub best_val_accuracy: f64,
    pub best_val_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    /// Parameters at the best validation step.
    pub best: Model,
    /// Parameters and optimizer state after the last step.
    pub last: ModelState,
    pub trace: TrainTrace,
}

/// Full-graph Adam training. Deterministic given `cfg.seed`.
pub fn train(dataset: &NodeDataset, input: &GraphInput, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    dataset.validate()?;
    if input.n() != dataset.n() {
        return Err(Error::Shape(format!(
            "message-passing graph over {} nodes, dataset over {}",
            input.n(),
            dataset.n()
        )));
    }
    let split = &dataset.split;
    if split.val.is_empty() {
        return Err(Error::Precondition("empty validation split".into()));
    }
    let mut model = Model::init(
        cfg.model_config(dataset.features.ncols(), dataset.num_classes),
        cfg.seed,
    )?;
    let mut adam = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(DROPOUT_STREAM);

    let labels = &dataset.labels;
    let mut records = Vec::with_capacity(cfg.steps);
    let mut best: Option<(StepRecord, Model)> = None;
    for step in 1..=cfg.steps {
        let f = forward(&model, &dataset.features, input, Some(&mut rng))?;
        let (train_loss, d_logits) = cross_entropy(&f.logits, labels, &split.train)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        let grads = backward(&model, input, &f, &d_logits)?;
        adam.update(&mut model, &grads, cfg.learning_rate, cfg.weight_decay);

        let eval = forward(&model, &dataset.features, input, None)?;
        let (val_loss, _) = cross_entropy(&eval.logits, labels, &split.val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        let rec = StepRecord {
            step,
            train_loss,
            val_loss,
            train_accuracy: accuracy(&eval.logits, labels, &split.train),
            val_accuracy: accuracy(&eval.logits, labels, &split.val),
            test_accuracy: accuracy(&eval.logits, labels, &split.test),
        };
        let improved = match &best {
            None => true,
            Some((b, _)) => {
                rec.val_accuracy > b.val_accuracy
                    || (rec.val_accuracy == b.val_accuracy && rec.val_loss < b.val_loss)
            }
        };
        if improved {
            best = Some((rec, model.clone()));
        }
        log::debug!(
            "step {step}: train loss {train_loss:.4}, val acc {:.4}",
            rec.val_accuracy
        );
        records.push(rec);
    }
    let (b, best_model) = best.expect("at least one step");
    Ok(TrainOutput {
        best: best_model,
        last: ModelState { model, adam },
        trace: TrainTrace {
            steps: records,
            best_step: b.step,
            best_val_accuracy: b.val_accuracy,
            best_val_loss: b.val_loss,
            test_accuracy: b.test_accuracy,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniform_logits_give_log_c() {
        let logits = Array2::zeros((3, 4));
        let (loss, _) = cross_entropy(&logits, &[0, 1, 2], &[0, 1, 2]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_logits_give_small_loss() {
        let logits = array![[40.0, 0.0], [0.0, 40.0]];
        let (loss, _) = cross_entropy(&logits, &[0, 1], &[0, 1]).unwrap();
        assert!(loss < 1e-6);
    }

    #[test]
    fn direct_summation() {
        let logits = array![[1.0, 2.0, 0.5], [0.0, -1.0, 3.0], [2.0, 2.0, 2.0]];
        let labels = [1, 0, 2];
        let (loss, grad) = cross_entropy(&logits, &labels, &[0, 1]).unwrap();
        let row_loss = |r: [f64; 3], z: usize| -> f64 {
            -(r[z].exp() / r.iter().map(|x| x.exp()).sum::<f64>()).ln()
        };
        let want = (row_loss([1.0, 2.0, 0.5], 1) + row_loss([0.0, -1.0, 3.0], 0)) / 2.0;
        assert!((loss - want).abs() < 1e-14);
        assert!(grad.row(2).iter().all(|&g| g == 0.0));
        let s: f64 = grad.row(0).sum();
        assert!(s.abs() < 1e-15);
    }

    #[test]
    fn empty_mask_is_rejected() {
        assert!(cross_entropy(&Array2::zeros((2, 2)), &[0, 1], &[]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let logits = array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        assert_eq!(accuracy(&logits, &[0, 1, 0], &[0, 1, 2]), 1.0);
        assert_eq!(accuracy(&logits, &[1, 1, 1], &[0, 1, 2]), 1.0 / 3.0);
    }
}
