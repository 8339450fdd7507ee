//! Shared fixtures for the benchmarks.

use dgat_core::nn::{GraphInput, TrainConfig};
use dgat_core::spectral::{eigendecompose, LaplacianParams, DEFAULT_EPS0};
use dgat_core::synth::{generate, NodeDataset, SynthConfig};

/// A synthetic graph with `n` nodes over five classes.
pub fn dataset(n: usize, mu: f64) -> NodeDataset {
    generate(&SynthConfig {
        n,
        mu,
        ..SynthConfig::default()
    })
    .expect("valid generator settings")
}

/// Message-passing input with edge features from `L(1, gamma)`.
pub fn directional_input(d: &NodeDataset, gamma: f64) -> GraphInput {
    let params = LaplacianParams::random_walk(gamma).expect("valid gamma");
    let bundle = eigendecompose(&d.graph, params).expect("connected graph");
    GraphInput::with_signal(&d.graph, &bundle.phi1, DEFAULT_EPS0).expect("edge features")
}

/// Training settings for a short benchmark run.
pub fn short_run(steps: usize) -> TrainConfig {
    TrainConfig {
        steps,
        ..TrainConfig::default()
    }
}
