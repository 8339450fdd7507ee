use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::GraphInput;
use super::layer::{Activation, LayerCache, LayerParams, LayerSetup};
use super::{Aggregation, AttentionMode};
use crate::error::{Error, Result};

const INIT_STREAM_BASE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: AttentionMode,
    pub aggregation: Aggregation,
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    pub edge_dim: usize,
    pub in_dim: usize,
    pub num_classes: usize,
    pub leaky_slope: f64,
    pub dropout: f64,
}

impl ModelConfig {
    /// Two layers of 8 heads with 8 hidden units each.
    pub fn new(
        mode: AttentionMode,
        aggregation: Aggregation,
        in_dim: usize,
        num_classes: usize,
    ) -> Self {
        ModelConfig {
            mode,
            aggregation,
            layers: 2,
            heads: 8,
            hidden: 8,
            edge_dim: 2,
            in_dim,
            num_classes,
            leaky_slope: 0.2,
            dropout: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("layers", self.layers),
            ("heads", self.heads),
            ("hidden", self.hidden),
            ("edge_dim", self.edge_dim),
            ("in_dim", self.in_dim),
            ("num_classes", self.num_classes),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::InvalidParameter("leaky_slope must be finite".into()));
        }
        Ok(())
    }

    fn concat_factor(&self) -> usize {
        match self.aggregation {
            Aggregation::Plain => 1,
            Aggregation::Sep => 2,
        }
    }

    /// `(in, out)` widths of layer `l`.
    pub fn layer_dims(&self, l: usize) -> (usize, usize) {
        let width = self.heads * self.hidden;
        let input = if l == 0 { self.in_dim } else { width };
        let output = if l + 1 == self.layers {
            self.num_classes
        } else {
            width
        };
        (input, output)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub layers: Vec<LayerParams>,
}

fn glorot(rows: usize, cols: usize, seed: u64, stream: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

impl Model {
    /// Each tensor draws from its own seeded stream, so the node-side
    /// parameters do not depend on whether edge parameters exist.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Model> {
        config.validate()?;
        let (h, d, de) = (config.heads, config.hidden, config.edge_dim);
        let layers = (0..config.layers)
            .map(|l| {
                let (d_in, d_out) = config.layer_dims(l);
                let stream = |id: u64| INIT_STREAM_BASE + l as u64 * 16 + id;
                let dgat = config.mode == AttentionMode::Dgat;
                LayerParams {
                    heads: h,
                    hidden: d,
                    edge_dim: de,
                    w_node: glorot(d_in, h * d, seed, stream(0)),
                    att_src: glorot(h, d, seed, stream(1)),
                    att_dst: glorot(h, d, seed, stream(2)),
                    w_edge: dgat.then(|| glorot(2, h * de, seed, stream(3))),
                    att_edge: dgat.then(|| glorot(h, de, seed, stream(4))),
                    w_out: glorot(h * d * config.concat_factor(), d_out, seed, stream(5)),
                }
            })
            .collect();
        Ok(Model { config, layers })
    }

    /// Checks tensor shapes against the configuration.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        if self.layers.len() != c.layers {
            return Err(Error::Shape(format!(
                "{} layers, config says {}",
                self.layers.len(),
                c.layers
            )));
        }
        let (h, d, de) = (c.heads, c.hidden, c.edge_dim);
        let dgat = c.mode == AttentionMode::Dgat;
        for (l, p) in self.layers.iter().enumerate() {
            let (d_in, d_out) = c.layer_dims(l);
            let expect = |name: &str,
                          a: Option<&Array2<f64>>,
                          shape: Option<(usize, usize)>|
             -> Result<()> {
                if a.map(|a| a.dim()) != shape {
                    return Err(Error::Shape(format!(
                        "layer {l} {name}: {:?}, expected {:?}",
                        a.map(|a| a.dim()),
                        shape
                    )));
                }
                Ok(())
            };
            expect("w_node", Some(&p.w_node), Some((d_in, h * d)))?;
            expect("att_src", Some(&p.att_src), Some((h, d)))?;
            expect("att_dst", Some(&p.att_dst), Some((h, d)))?;
            expect("w_edge", p.w_edge.as_ref(), dgat.then_some((2, h * de)))?;
            expect("att_edge", p.att_edge.as_ref(), dgat.then_some((h, de)))?;
            expect(
                "w_out",
                Some(&p.w_out),
                Some((h * d * c.concat_factor(), d_out)),
            )?;
            if p.heads != h || p.hidden != d || p.edge_dim != de {
                return Err(Error::Shape(format!(
                    "layer {l} head layout disagrees with config"
                )));
            }
            if p.tensors()
                .iter()
                .any(|(_, t)| t.iter().any(|x| !x.is_finite()))
            {
                return Err(Error::InvalidParameter(format!(
                    "layer {l} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|p| p.tensors())
            .map(|(_, t)| t.len())
            .sum()
    }

    /// Parameter tensors named `layers.<l>.<tensor>` in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Array2<f64>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, p)| {
                p.tensors()
                    .into_iter()
                    .map(move |(name, t)| (format!("layers.{l}.{name}"), t))
            })
            .collect()
    }

    fn setup<'a>(&'a self, l: usize, input: &'a GraphInput) -> LayerSetup<'a> {
        LayerSetup {
            params: &self.layers[l],
            input,
            mode: self.config.mode,
            aggregation: self.config.aggregation,
            activation: if l + 1 == self.config.layers {
                Activation::Identity
            } else {
                Activation::Elu
            },
            slope: self.config.leaky_slope,
        }
    }
}

/// Cached forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Array2<f64>,
    caches: Vec<LayerCache>,
}

impl Forward {
    /// Attention coefficients of layer `l` (before dropout), one column per
    /// head, one row per directed edge of the input graph.
    pub fn attention(&self, l: usize) -> &Array2<f64> {
        &self.caches[l].alpha
    }
}

fn dropout_mask(rng: &mut ChaCha8Rng, shape: (usize, usize), p: f64) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { 0.0 } else { keep })
}

/// Runs the model. Passing an RNG enables dropout on every layer input and on
/// the attention coefficients.
pub fn forward(
    model: &Model,
    x: &Array2<f64>,
    input: &GraphInput,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Forward> {
    let c = &model.config;
    if x.dim() != (input.n(), c.in_dim) {
        return Err(Error::Shape(format!(
            "features {:?}, expected ({}, {})",
            x.dim(),
            input.n(),
            c.in_dim
        )));
    }
    if c.mode == AttentionMode::Dgat && input.features.is_none() {
        return Err(Error::Precondition(
            "directional attention needs edge features".into(),
        ));
    }
    let mut rng = rng.filter(|_| c.dropout > 0.0);
    let mut h = x.as_standard_layout().into_owned();
    let mut caches = Vec::with_capacity(c.layers);
    for l in 0..c.layers {
        let (input_mask, alpha_mask) = match rng.as_deref_mut() {
            Some(r) => {
                let im = dropout_mask(r, h.dim(), c.dropout);
                let am = dropout_mask(r, (input.num_directed(), c.heads), c.dropout);
                (Some(im), Some(am))
            }
            None => (None, None),
        };
        let (out, cache) = model.setup(l, input).forward(&h, input_mask, alpha_mask);
        caches.push(cache);
        h = out;
    }
    Ok(Forward { logits: h, caches })
}

/// Gradients of every parameter given the gradient of the logits.
pub fn backward(
    model: &Model,
    input: &GraphInput,
    fwd: &Forward,
    d_logits: &Array2<f64>,
) -> Result<Vec<LayerParams>> {
    if d_logits.dim() != fwd.logits.dim() {
        return Err(Error::Shape(format!(
            "logit gradient {:?} for logits {:?}",
            d_logits.dim(),
            fwd.logits.dim()
        )));
    }
    let mut grads = Vec::with_capacity(model.layers.len());
    let mut d = d_logits.clone();
    for l in (0..model.layers.len()).rev() {
        let (g, d_in) = model.setup(l, input).backward(&fwd.caches[l], &d, l > 0);
        grads.push(g);
        if let Some(d_in) = d_in {
            d = d_in;
        }
    }
    grads.reverse();
    Ok(grads)
}
