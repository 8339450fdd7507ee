//! Parameterized graph Laplacians, spectral rewiring and directional graph
//! attention for node classification under heterophily.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: simple undirected graphs in CSR form.
//! - [`spectral`]: the `L(alpha, gamma)` Laplacian family, its
//!   eigendecomposition, diffusion and spectral distances, and the
//!   directional matrices built from the first non-trivial eigenvector.
//! - [`rewire`]: spectral-distance pruning and edge adding.
//! - [`metrics`]: homophily measures.
//! - [`synth`]: the synthetic generator with a homophily coefficient.
//! - [`nn`]: the attention classifier, its gradients and training loop.
//! - [`experiment`]: the seeded sweep harness.
//! - [`io`]: file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod rewire;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{add_self_loops, build_graph, connectivity, degrees, ConnectivityReport, Graph};
pub use metrics::{metric_report, LabeledGraph, MetricReport};
pub use nn::{Aggregation, AttentionMode, Checkpoint, GraphInput, Model, ModelConfig, TrainConfig};
pub use rewire::{rewire, RewireMode, RewirePlan};
pub use spectral::{eigendecompose, LaplacianParams, SpectralBundle};
pub use synth::{generate, NodeDataset, Split, SynthConfig};
