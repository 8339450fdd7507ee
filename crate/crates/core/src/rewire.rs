//! Topology-guided rewiring driven by the first non-trivial eigenvector of
//! `L(1, gamma)`.
//!
//! Pruning compares the spectral distance `|phi_i - phi_j|` of every edge with
//! a threshold. Edge adding links every node below the midpoint of the
//! eigenvector's range to the node at its maximum, and every node above it to
//! the node at its minimum. The rewired graph always carries self-loops.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{add_self_loops, Graph};
use crate::spectral::SpectralBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewireMode {
    None,
    HomophilyPrune,
    HeterophilyPrune,
    HeterophilyPruneAndAdd,
}

impl RewireMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RewireMode::None => "none",
            RewireMode::HomophilyPrune => "homophily_prune",
            RewireMode::HeterophilyPrune => "heterophily_prune",
            RewireMode::HeterophilyPruneAndAdd => "heterophily_prune_and_add",
        }
    }
}

impl fmt::Display for RewireMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RewireMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(RewireMode::None),
            "homophily_prune" | "homophily" => Ok(RewireMode::HomophilyPrune),
            "heterophily_prune" | "heterophily" => Ok(RewireMode::HeterophilyPrune),
            "heterophily_prune_and_add" | "heterophily_add" => {
                Ok(RewireMode::HeterophilyPruneAndAdd)
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown rewire mode '{other}'"
            ))),
        }
    }
}

/// Which side of the threshold gets pruned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneRule {
    /// Drop edges with spectral distance strictly below epsilon.
    Homophily,
    /// Drop edges with spectral distance strictly above epsilon.
    Heterophily,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeNodes {
    pub vmin: usize,
    pub vmax: usize,
    pub midpoint: f64,
}

#[derive(Debug, Clone)]
pub struct RewirePlan {
    pub mode: RewireMode,
    pub epsilon: f64,
    pub pruned: Vec<(usize, usize)>,
    pub added: Vec<(usize, usize)>,
    pub extremes: Option<ExtremeNodes>,
    pub result: Graph,
}

/// The serializable summary written next to a rewired graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanRecord {
    pub mode: RewireMode,
    pub epsilon: f64,
    pub pruned: Vec<(usize, usize)>,
    pub added: Vec<(usize, usize)>,
    pub midpoint: Option<f64>,
}

impl RewirePlan {
    pub fn record(&self) -> PlanRecord {
        PlanRecord {
            mode: self.mode,
            epsilon: self.epsilon,
            pruned: self.pruned.clone(),
            added: self.added.clone(),
            midpoint: self.extremes.map(|e| e.midpoint),
        }
    }
}

fn check_signal(g: &Graph, phi1: &[f64]) -> Result<()> {
    if phi1.len() != g.n() {
        return Err(Error::Shape(format!(
            "signal has {} entries for {} nodes",
            phi1.len(),
            g.n()
        )));
    }
    Ok(())
}

pub fn prune_edges(
    g: &Graph,
    phi1: &[f64],
    epsilon: f64,
    rule: PruneRule,
) -> Result<Vec<(usize, usize)>> {
    check_signal(g, phi1)?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon}")));
    }
    Ok(g.edges()
        .iter()
        .copied()
        .filter(|&(u, v)| {
            let ds = (phi1[u] - phi1[v]).abs();
            match rule {
                PruneRule::Homophily => ds < epsilon,
                PruneRule::Heterophily => ds > epsilon,
            }
        })
        .collect())
}

/// Minimum and maximum of the signal (lowest index on ties) and the midpoint
/// of its range; `None` for a constant signal.
pub fn extreme_nodes(phi1: &[f64]) -> Option<ExtremeNodes> {
    let mut vmin = 0;
    let mut vmax = 0;
    for (k, &x) in phi1.iter().enumerate() {
        if x < phi1[vmin] {
            vmin = k;
        }
        if x > phi1[vmax] {
            vmax = k;
        }
    }
    if phi1.is_empty() || phi1[vmin] == phi1[vmax] {
        return None;
    }
    Some(ExtremeNodes {
        vmin,
        vmax,
        midpoint: 0.5 * (phi1[vmin] + phi1[vmax]),
    })
}

/// New edges to the extreme nodes; existing edges and self-pairs are skipped.
pub fn add_edges(g: &Graph, phi1: &[f64]) -> Result<Vec<(usize, usize)>> {
    check_signal(g, phi1)?;
    let Some(ext) = extreme_nodes(phi1) else {
        log::warn!("eigenvector is constant; no edges added");
        return Ok(Vec::new());
    };
    let mut added = Vec::new();
    for (i, &x) in phi1.iter().enumerate() {
        let target = if x < ext.midpoint {
            ext.vmax
        } else if x > ext.midpoint {
            ext.vmin
        } else {
            continue;
        };
        if target != i && !g.has_edge(i, target) {
            added.push((i.min(target), i.max(target)));
        }
    }
    added.sort_unstable();
    added.dedup();
    Ok(added)
}

pub fn rewire(
    g: &Graph,
    bundle: &SpectralBundle,
    mode: RewireMode,
    epsilon: f64,
) -> Result<RewirePlan> {
    if !bundle.params.is_random_walk() {
        return Err(Error::NotRandomWalk(bundle.params.alpha()));
    }
    rewire_with_signal(g, &bundle.phi1, mode, epsilon)
}

/// [`rewire`] driven by an explicit signal instead of a bundle.
pub fn rewire_with_signal(
    g: &Graph,
    phi1: &[f64],
    mode: RewireMode,
    epsilon: f64,
) -> Result<RewirePlan> {
    check_signal(g, phi1)?;
    let base = g.without_self_loops();
    let pruned = match mode {
        RewireMode::None => Vec::new(),
        RewireMode::HomophilyPrune => prune_edges(&base, phi1, epsilon, PruneRule::Homophily)?,
        RewireMode::HeterophilyPrune | RewireMode::HeterophilyPruneAndAdd => {
            prune_edges(&base, phi1, epsilon, PruneRule::Heterophily)?
        }
    };
    let added = if mode == RewireMode::HeterophilyPruneAndAdd {
        add_edges(&base, phi1)?
    } else {
        Vec::new()
    };
    let result = add_self_loops(&base.with_edge_changes(&pruned, &added));
    Ok(RewirePlan {
        mode,
        epsilon,
        pruned,
        added,
        extremes: extreme_nodes(phi1),
        result,
    })
}
