//! Homophily measures of a labeled graph.
//!
//! Self-loops are ignored by every measure except aggregation homophily,
//! which uses `A + I` by definition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledGraph {
    /// `num_classes` defaults to one more than the largest label.
    pub fn new(graph: Graph, labels: Vec<usize>, num_classes: Option<usize>) -> Result<Self> {
        if labels.len() != graph.n() {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                graph.n()
            )));
        }
        let inferred = labels.iter().max().map_or(0, |m| m + 1);
        let num_classes = num_classes.unwrap_or(inferred);
        if let Some(&bad) = labels.iter().find(|&&z| z >= num_classes) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} outside 0..{num_classes}"
            )));
        }
        Ok(LabeledGraph {
            graph,
            labels,
            num_classes,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_classes];
        for &z in &self.labels {
            sizes[z] += 1;
        }
        sizes
    }

    fn require_edges(&self) -> Result<()> {
        if self.graph.num_edges() == 0 {
            Err(Error::Degenerate("graph has no edges".into()))
        } else {
            Ok(())
        }
    }

    /// Degree-weighted class distribution.
    fn degree_class_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.num_classes];
        for i in 0..self.n() {
            p[self.labels[i]] += self.graph.simple_degree(i) as f64;
        }
        let total = 2.0 * self.graph.num_edges() as f64;
        p.iter_mut().for_each(|x| *x /= total);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub h_node: f64,
    pub h_edge: f64,
    pub h_edge_adjusted: f64,
    pub h_class: f64,
    pub label_informativeness: f64,
    pub h_agg: f64,
}

/// Mean over nodes of the fraction of neighbours sharing the node's label.
/// Isolated nodes contribute zero.
pub fn node_homophily(lg: &LabeledGraph) -> f64 {
    let g = &lg.graph;
    let total: f64 = (0..g.n())
        .map(|u| {
            let mut deg = 0usize;
            let mut same = 0usize;
            for v in g.proper_neighbors(u) {
                deg += 1;
                same += usize::from(lg.labels[v] == lg.labels[u]);
            }
            if deg == 0 {
                0.0
            } else {
                same as f64 / deg as f64
            }
        })
        .sum();
    total / g.n() as f64
}

/// Fraction of edges joining same-label endpoints.
pub fn edge_homophily(lg: &LabeledGraph) -> Result<f64> {
    lg.require_edges()?;
    let same = lg
        .graph
        .edges()
        .iter()
        .filter(|&&(u, v)| lg.labels[u] == lg.labels[v])
        .count();
    Ok(same as f64 / lg.graph.num_edges() as f64)
}

/// Edge homophily corrected for the degree-weighted class balance.
pub fn adjusted_edge_homophily(lg: &LabeledGraph) -> Result<f64> {
    let h = edge_homophily(lg)?;
    let sq: f64 = lg.degree_class_distribution().iter().map(|p| p * p).sum();
    let denom = 1.0 - sq;
    if denom.abs() < 1e-15 {
        return Err(Error::Degenerate(
            "all edge endpoints share one class; adjusted edge homophily is undefined".into(),
        ));
    }
    Ok((h - sq) / denom)
}

/// `1/(C-1) * sum_c [h_c - |c|/N]_+` where `h_c` is the share of same-class
/// neighbour incidences among all incidences of class-`c` nodes.
pub fn class_homophily(lg: &LabeledGraph) -> Result<f64> {
    lg.require_edges()?;
    let c = lg.num_classes;
    if c < 2 {
        return Err(Error::Degenerate(
            "class homophily needs at least two classes".into(),
        ));
    }
    let mut same = vec![0usize; c];
    let mut degree = vec![0usize; c];
    for i in 0..lg.n() {
        let zi = lg.labels[i];
        for j in lg.graph.proper_neighbors(i) {
            degree[zi] += 1;
            same[zi] += usize::from(lg.labels[j] == zi);
        }
    }
    let sizes = lg.class_sizes();
    let n = lg.n() as f64;
    let total: f64 = (0..c)
        .filter(|&k| degree[k] > 0)
        .map(|k| (same[k] as f64 / degree[k] as f64 - sizes[k] as f64 / n).max(0.0))
        .sum();
    Ok(total / (c - 1) as f64)
}

fn entropy_sum(ps: impl Iterator<Item = f64>) -> f64 {
    ps.filter(|&p| p > 0.0).map(|p| p * p.ln()).sum()
}

/// `2 - sum p(c1,c2) log p(c1,c2) / sum p(c) log p(c)` over directed edge
/// label pairs.
pub fn label_informativeness(lg: &LabeledGraph) -> Result<f64> {
    lg.require_edges()?;
    let c = lg.num_classes;
    let mut joint = vec![0.0; c * c];
    for &(u, v) in lg.graph.edges() {
        let (a, b) = (lg.labels[u], lg.labels[v]);
        joint[a * c + b] += 1.0;
        joint[b * c + a] += 1.0;
    }
    let total = 2.0 * lg.graph.num_edges() as f64;
    let joint_term = entropy_sum(joint.iter().map(|x| x / total));
    let marginal_term = entropy_sum(lg.degree_class_distribution().into_iter());
    if marginal_term == 0.0 {
        return Err(Error::Degenerate(
            "single-class degree distribution; label informativeness is undefined".into(),
        ));
    }
    Ok(2.0 - joint_term / marginal_term)
}

/// Share of nodes whose mean post-aggregation similarity `S = (ÂZ)(ÂZ)^T`
/// to same-label nodes is at least that to other-label nodes. A node with no
/// other-label nodes counts as satisfying the comparison.
pub fn aggregation_homophily(lg: &LabeledGraph) -> f64 {
    let (n, c) = (lg.n(), lg.num_classes);
    // Row i of ÂZ: label counts over the closed neighbourhood of i.
    let mut az = vec![0.0; n * c];
    for i in 0..n {
        az[i * c + lg.labels[i]] += 1.0;
        for j in lg.graph.proper_neighbors(i) {
            az[i * c + lg.labels[j]] += 1.0;
        }
    }
    // Column sums of ÂZ restricted to each class.
    let mut class_sum = vec![0.0; c * c];
    let sizes = lg.class_sizes();
    for j in 0..n {
        let z = lg.labels[j];
        for k in 0..c {
            class_sum[z * c + k] += az[j * c + k];
        }
    }
    let mut all_sum = vec![0.0; c];
    for z in 0..c {
        for k in 0..c {
            all_sum[k] += class_sum[z * c + k];
        }
    }
    let dot =
        |row: &[f64], other: &[f64]| -> f64 { row.iter().zip(other).map(|(a, b)| a * b).sum() };
    let satisfied = (0..n)
        .filter(|&i| {
            let z = lg.labels[i];
            let row = &az[i * c..(i + 1) * c];
            let same_total = dot(row, &class_sum[z * c..(z + 1) * c]);
            let other_count = n - sizes[z];
            if other_count == 0 {
                return true;
            }
            let other: Vec<f64> = (0..c).map(|k| all_sum[k] - class_sum[z * c + k]).collect();
            let other_total = dot(row, &other);
            // Compare means without dividing: same/|z| >= other/(n-|z|).
            same_total * other_count as f64 >= other_total * sizes[z] as f64
        })
        .count();
    satisfied as f64 / n as f64
}

pub fn metric_report(lg: &LabeledGraph) -> Result<MetricReport> {
    Ok(MetricReport {
        h_node: node_homophily(lg),
        h_edge: edge_homophily(lg)?,
        h_edge_adjusted: adjusted_edge_homophily(lg)?,
        h_class: class_homophily(lg)?,
        label_informativeness: label_informativeness(lg)?,
        h_agg: aggregation_homophily(lg),
    })
}
