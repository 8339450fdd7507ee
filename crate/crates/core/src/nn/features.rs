use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{add_self_loops, Graph};
use crate::spectral::{directional_field, DirectionalField};

/// One `[B_av(i, j), B_dx(i, j)]` row per directed CSR entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatures {
    pub values: Array2<f64>,
}

pub fn edge_features(rewired: &Graph, field: &DirectionalField) -> Result<EdgeFeatures> {
    if field.n() != rewired.n() {
        return Err(Error::Shape(format!(
            "field over {} nodes, graph over {}",
            field.n(),
            rewired.n()
        )));
    }
    let mut values = Array2::zeros((rewired.num_directed(), 2));
    for i in 0..rewired.n() {
        let field_row = &field.targets[field.row(i)];
        for e in rewired.offsets()[i]..rewired.offsets()[i + 1] {
            let j = rewired.targets()[e];
            if j == i {
                values[[e, 0]] = 0.0;
                values[[e, 1]] = field.b_dx_diag[i];
                continue;
            }
            let k = field_row
                .binary_search(&j)
                .map_err(|_| Error::EdgeMissing(i, j))?
                + field.offsets[i];
            values[[e, 0]] = field.b_av[k];
            values[[e, 1]] = field.b_dx_offdiag[k];
        }
    }
    Ok(EdgeFeatures { values })
}

/// Message-passing structure handed to the model: a graph whose every node
/// has at least one outgoing entry, the source node of every CSR entry and,
/// for directional attention, the edge features.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub graph: Graph,
    pub src: Vec<usize>,
    pub features: Option<EdgeFeatures>,
}

impl GraphInput {
    pub fn new(graph: Graph, features: Option<EdgeFeatures>) -> Result<Self> {
        if let Some(i) = (0..graph.n()).find(|&i| graph.degree(i) == 0) {
            return Err(Error::Precondition(format!(
                "node {i} has an empty neighbourhood; add self-loops first"
            )));
        }
        if let Some(f) = &features {
            if f.values.nrows() != graph.num_directed() || f.values.ncols() != 2 {
                return Err(Error::Shape(format!(
                    "edge features {:?} for {} directed edges",
                    f.values.dim(),
                    graph.num_directed()
                )));
            }
        }
        let mut src = Vec::with_capacity(graph.num_directed());
        for i in 0..graph.n() {
            src.extend(std::iter::repeat_n(i, graph.degree(i)));
        }
        Ok(GraphInput {
            graph,
            src,
            features,
        })
    }

    /// The graph with self-loops and no edge features.
    pub fn plain(graph: &Graph) -> Result<Self> {
        GraphInput::new(add_self_loops(graph), None)
    }

    /// Builds the vector field of `phi` on the (rewired) graph and its edge
    /// features.
    pub fn with_signal(rewired: &Graph, phi: &[f64], eps0: f64) -> Result<Self> {
        let graph = add_self_loops(rewired);
        let field = directional_field(&graph, phi, eps0)?;
        let features = edge_features(&graph, &field)?;
        GraphInput::new(graph, Some(features))
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn num_directed(&self) -> usize {
        self.src.len()
    }

    pub fn offsets(&self) -> &[usize] {
        self.graph.offsets()
    }

    pub fn dst(&self) -> &[usize] {
        self.graph.targets()
    }
}
