//! Synthetic graphs with a tunable homophily coefficient.
//!
//! Nodes arrive one at a time. A newcomer of class `z_i` attaches to an
//! existing node `j` with probability proportional to
//!
//! ```text
//! d_j * mu                          if z_i == z_j
//! d_j * (1 - mu) * w[dist(z_i, z_j)] otherwise
//! ```
//!
//! where `dist` is the distance between classes on a circle of `C` classes and
//! `w` decays as `exp(-dist)`, normalized to sum to one. Growth starts from a
//! clique holding one node of every class. Node features are Gaussian around
//! class means placed on the unit circle in the first two coordinates.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph};

const GRAPH_STREAM: u64 = 1;
const FEATURE_STREAM: u64 = 2;
const SPLIT_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub classes: usize,
    pub mu: f64,
    pub edges_per_node: usize,
    pub feature_dim: usize,
    pub feature_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 400,
            classes: 5,
            mu: 0.5,
            edges_per_node: 2,
            feature_dim: 2,
            feature_std: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.n < self.classes || self.n % self.classes != 0 {
            return Err(Error::InvalidParameter(format!(
                "n = {} must be a positive multiple of the class count {}",
                self.n, self.classes
            )));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidParameter(format!(
                "mu = {} outside [0, 1]",
                self.mu
            )));
        }
        if self.edges_per_node == 0 {
            return Err(Error::InvalidParameter(
                "edges_per_node must be positive".into(),
            ));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidParameter(
                "feature_dim must be positive".into(),
            ));
        }
        if !(self.feature_std > 0.0 && self.feature_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "feature_std = {}",
                self.feature_std
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mask(nodes: &[usize], n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in nodes {
            m[i] = true;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeta {
    pub config: SynthConfig,
    /// Attachments drawn uniformly because every weight was zero.
    pub fallback_edges: usize,
}

#[derive(Debug, Clone)]
pub struct NodeDataset {
    pub graph: Graph,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub features: Array2<f64>,
    pub split: Split,
    pub meta: Option<SynthMeta>,
}

impl NodeDataset {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.labels.len() != n || self.features.nrows() != n {
            return Err(Error::Shape(format!(
                "{} labels and {} feature rows for {} nodes",
                self.labels.len(),
                self.features.nrows(),
                n
            )));
        }
        if self.labels.iter().any(|&z| z >= self.num_classes) {
            return Err(Error::InvalidParameter("label outside class range".into()));
        }
        if self.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite feature".into()));
        }
        let mut seen = vec![false; n];
        for &i in self
            .split
            .train
            .iter()
            .chain(&self.split.val)
            .chain(&self.split.test)
        {
            if i >= n || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "split entry {i} repeated or out of range"
                )));
            }
            seen[i] = true;
        }
        Ok(())
    }

    /// Restriction to `nodes` (in the given order). Split entries outside
    /// `nodes` are dropped; the generator metadata is kept.
    pub fn induced(&self, nodes: &[usize]) -> NodeDataset {
        let mut index = vec![usize::MAX; self.n()];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let remap = |part: &[usize]| -> Vec<usize> {
            let mut out: Vec<usize> = part
                .iter()
                .map(|&i| index[i])
                .filter(|&k| k != usize::MAX)
                .collect();
            out.sort_unstable();
            out
        };
        NodeDataset {
            graph: self.graph.induced(nodes),
            labels: nodes.iter().map(|&v| self.labels[v]).collect(),
            num_classes: self.num_classes,
            features: self.features.select(ndarray::Axis(0), nodes),
            split: Split {
                train: remap(&self.split.train),
                val: remap(&self.split.val),
                test: remap(&self.split.test),
            },
            meta: self.meta.clone(),
        }
    }
}

/// Shortest distance between two classes on a circle of `c` classes.
pub fn circular_distance(a: usize, b: usize, c: usize) -> usize {
    let d = a.abs_diff(b) % c;
    d.min(c - d)
}

/// `w[d - 1]` for class distances `d = 1..=c/2`, proportional to `exp(-d)`
/// and summing to one.
pub fn class_distance_weights(c: usize) -> Result<Vec<f64>> {
    if c < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes, got {c}"
        )));
    }
    let raw: Vec<f64> = (1..=c / 2).map(|d| (-(d as f64)).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Unnormalized attachment weight of a newcomer of class `new_class` to an
/// existing node of class `class` and degree `degree`.
pub fn attachment_weight(
    new_class: usize,
    class: usize,
    degree: usize,
    mu: f64,
    weights: &[f64],
    c: usize,
) -> f64 {
    let d = degree as f64;
    if new_class == class {
        d * mu
    } else {
        d * (1.0 - mu) * weights[circular_distance(new_class, class, c) - 1]
    }
}

/// Attachment distribution of a newcomer over the existing nodes, normalized
/// over all of them. `None` when every weight is zero.
pub fn attachment_distribution(
    new_class: usize,
    labels: &[usize],
    degrees: &[usize],
    mu: f64,
    c: usize,
) -> Result<Option<Vec<f64>>> {
    let weights = class_distance_weights(c)?;
    let raw: Vec<f64> = labels
        .iter()
        .zip(degrees)
        .map(|(&z, &d)| attachment_weight(new_class, z, d, mu, &weights, c))
        .collect();
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Ok(None);
    }
    Ok(Some(raw.into_iter().map(|w| w / total).collect()))
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `k` distinct indices with probability proportional to `weights`,
/// sequentially and without replacement. Returns the picks and how many
/// fell back to a uniform draw because the remaining weight was zero.
fn draw_distinct<R: Rng>(rng: &mut R, weights: &[f64], k: usize) -> (Vec<usize>, usize) {
    let mut w = weights.to_vec();
    let mut taken = vec![false; w.len()];
    let mut picks = Vec::with_capacity(k);
    let mut fallbacks = 0;
    for _ in 0..k.min(w.len()) {
        let total: f64 = w.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (j, &x) in w.iter().enumerate() {
                if x > 0.0 {
                    acc += x;
                    chosen = Some(j);
                    if r < acc {
                        break;
                    }
                }
            }
            chosen.expect("positive total has a positive entry")
        } else {
            fallbacks += 1;
            let free: Vec<usize> = (0..w.len()).filter(|&j| !taken[j]).collect();
            free[rng.random_range(0..free.len())]
        };
        taken[pick] = true;
        w[pick] = 0.0;
        picks.push(pick);
    }
    (picks, fallbacks)
}

/// Seeded 60/20/20-style split of `0..n`; each part is sorted.
pub fn split(n: usize, ratios: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (a, b, c) = ratios;
    if n < 5 {
        return Err(Error::InvalidParameter(format!("cannot split {n} nodes")));
    }
    if [a, b, c].iter().any(|r| !(r.is_finite() && *r >= 0.0)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "split ratios {ratios:?} must sum to one"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, SPLIT_STREAM));
    let n_train = (a * n as f64).round() as usize;
    let n_val = ((b * n as f64).round() as usize).min(n - n_train);
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test })
}

pub fn generate(cfg: &SynthConfig) -> Result<NodeDataset> {
    cfg.validate()?;
    let (n, c) = (cfg.n, cfg.classes);
    let weights = class_distance_weights(c)?;
    let mut rng = stream_rng(cfg.seed, GRAPH_STREAM);

    let mut labels: Vec<usize> = (0..c).collect();
    let mut rest: Vec<usize> = (0..c)
        .flat_map(|k| std::iter::repeat_n(k, n / c - 1))
        .collect();
    rest.shuffle(&mut rng);
    labels.extend(rest);

    let mut edges = Vec::with_capacity(c * (c - 1) / 2 + (n - c) * cfg.edges_per_node);
    let mut degree = vec![0usize; n];
    for u in 0..c {
        for v in (u + 1)..c {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }

    let mut fallback_edges = 0;
    let mut w = Vec::with_capacity(n);
    for i in c..n {
        w.clear();
        w.extend(
            (0..i).map(|j| attachment_weight(labels[i], labels[j], degree[j], cfg.mu, &weights, c)),
        );
        let (picks, fallbacks) = draw_distinct(&mut rng, &w, cfg.edges_per_node);
        fallback_edges += fallbacks;
        for j in picks {
            edges.push((j, i));
            degree[j] += 1;
            degree[i] += 1;
        }
    }
    if fallback_edges > 0 {
        log::info!(
            "{fallback_edges} attachments fell back to uniform choice (mu = {})",
            cfg.mu
        );
    }
    let graph = build_graph(n, &edges)?;

    let mut frng = stream_rng(cfg.seed, FEATURE_STREAM);
    let mut features = Array2::zeros((n, cfg.feature_dim));
    for i in 0..n {
        let angle = 2.0 * PI * labels[i] as f64 / c as f64;
        for k in 0..cfg.feature_dim {
            let mean = match k {
                0 => angle.cos(),
                1 => angle.sin(),
                _ => 0.0,
            };
            let noise: f64 = StandardNormal.sample(&mut frng);
            features[[i, k]] = mean + cfg.feature_std * noise;
        }
    }

    Ok(NodeDataset {
        graph,
        labels,
        num_classes: c,
        features,
        split: split(n, (0.6, 0.2, 0.2), cfg.seed)?,
        meta: Some(SynthMeta {
            config: *cfg,
            fallback_edges,
        }),
    })
}
