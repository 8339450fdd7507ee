//! The parameterized normalized Laplacian family and what is built on it.
//!
//! For a graph with degree matrix `D` and combinatorial Laplacian `L = D - A`,
//! write `S = gamma * D + (1 - gamma) * I`. The family is
//!
//! ```text
//! L(alpha, gamma) = gamma * S^(-alpha) * L * S^(alpha - 1)
//! P(alpha, gamma) = I - L(alpha, gamma)
//! ```
//!
//! with `gamma` in `(0, 1]` and `alpha` in `[0, 1]`. `(1, 1)` is the
//! random-walk Laplacian, `(1/2, 1)` the symmetric one, and `L / gamma`
//! tends to `L` as `gamma -> 0`. Every member is similar to the symmetric
//! `L(1/2, gamma)`, so eigenpairs come from one symmetric solve:
//! if `L(1/2, gamma) = U diag(lambda) U^T` then the columns of
//! `S^(1/2 - alpha) U` are eigenvectors of `L(alpha, gamma)`.
//!
//! Self-loops are ignored here; degrees are simple-graph degrees.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{connectivity, Graph};
use crate::linalg::symmetric_eigen;

pub const DEFAULT_MAX_DENSE_NODES: usize = 20_000;

/// Eigenvalues below this are treated as the trivial zero eigenvalue.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Default stabilizer for row normalization of the vector field.
pub const DEFAULT_EPS0: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianParams {
    gamma: f64,
    alpha: f64,
}

impl LaplacianParams {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {gamma} outside (0, 1]"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} outside [0, 1]"
            )));
        }
        Ok(LaplacianParams { gamma, alpha })
    }

    /// `alpha = 1`, the random-walk branch.
    pub fn random_walk(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_random_walk(&self) -> bool {
        self.alpha == 1.0
    }
}

/// Diagonal of `gamma * D + (1 - gamma) * I`.
pub fn shifted_degrees(g: &Graph, gamma: f64) -> Vec<f64> {
    (0..g.n())
        .map(|i| gamma * g.simple_degree(i) as f64 + (1.0 - gamma))
        .collect()
}

pub fn combinatorial_laplacian(g: &Graph) -> Array2<f64> {
    let n = g.n();
    let mut l = Array2::zeros((n, n));
    for &(u, v) in g.edges() {
        l[[u, v]] = -1.0;
        l[[v, u]] = -1.0;
    }
    for i in 0..n {
        l[[i, i]] = g.simple_degree(i) as f64;
    }
    l
}

fn check_spectral_input(g: &Graph, max_nodes: usize) -> Result<()> {
    if g.n() > max_nodes {
        return Err(Error::TooLarge {
            n: g.n(),
            limit: max_nodes,
        });
    }
    if let Some(i) = (0..g.n()).find(|&i| g.simple_degree(i) == 0) {
        return Err(Error::IsolatedNode(i));
    }
    let report = connectivity(g);
    if !report.is_connected() {
        return Err(Error::Disconnected {
            components: report.component_count,
        });
    }
    Ok(())
}

/// Dense `L(alpha, gamma)`.
pub fn parameterized_laplacian(g: &Graph, p: LaplacianParams) -> Result<Array2<f64>> {
    check_spectral_input(g, DEFAULT_MAX_DENSE_NODES)?;
    Ok(laplacian_unchecked(g, p))
}

fn laplacian_unchecked(g: &Graph, p: LaplacianParams) -> Array2<f64> {
    let s = shifted_degrees(g, p.gamma);
    let left: Vec<f64> = s.iter().map(|x| x.powf(-p.alpha)).collect();
    let right: Vec<f64> = s.iter().map(|x| x.powf(p.alpha - 1.0)).collect();
    let mut l = combinatorial_laplacian(g);
    for ((i, j), x) in l.indexed_iter_mut() {
        if *x != 0.0 {
            *x *= p.gamma * left[i] * right[j];
        }
    }
    l
}

/// Dense `P(alpha, gamma) = I - L(alpha, gamma)`.
pub fn parameterized_adjacency(g: &Graph, p: LaplacianParams) -> Result<Array2<f64>> {
    let l = parameterized_laplacian(g, p)?;
    Ok(Array2::eye(g.n()) - l)
}

/// Eigenpairs of `L(alpha, gamma)` for a connected graph.
#[derive(Debug, Clone)]
pub struct SpectralBundle {
    pub params: LaplacianParams,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `L(1/2, gamma)` as columns.
    pub sym_eigvecs: Array2<f64>,
    /// `s_i^(1/2 - alpha)`, mapping columns of `sym_eigvecs` to eigenvectors
    /// of `L(alpha, gamma)`.
    pub scale_diag: Vec<f64>,
    /// Eigenvector for the smallest positive eigenvalue, sign-canonicalized.
    pub phi1: Vec<f64>,
    /// Set when the smallest positive eigenvalue is (numerically) repeated.
    pub degenerate: bool,
}

impl SpectralBundle {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvector `k` of `L(alpha, gamma)`: `S^(1/2 - alpha)` times column `k`
    /// of the symmetric basis.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.sym_eigvecs
            .column(k)
            .iter()
            .zip(&self.scale_diag)
            .map(|(u, s)| u * s)
            .collect()
    }

    fn entry(&self, node: usize, k: usize) -> f64 {
        self.scale_diag[node] * self.sym_eigvecs[[node, k]]
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::InvalidNode {
                index: i,
                n: self.n(),
            })
        }
    }

    fn require_random_walk(&self) -> Result<()> {
        if self.params.is_random_walk() {
            Ok(())
        } else {
            Err(Error::NotRandomWalk(self.params.alpha()))
        }
    }
}

/// Index of the entry with the largest magnitude; near-ties go to the lowest
/// index.
fn dominant_index(v: &[f64]) -> usize {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = max * 1e-12;
    v.iter().position(|x| x.abs() >= max - tol).unwrap_or(0)
}

pub fn eigendecompose(g: &Graph, p: LaplacianParams) -> Result<SpectralBundle> {
    eigendecompose_with_limit(g, p, DEFAULT_MAX_DENSE_NODES)
}

pub fn eigendecompose_with_limit(
    g: &Graph,
    p: LaplacianParams,
    max_nodes: usize,
) -> Result<SpectralBundle> {
    check_spectral_input(g, max_nodes)?;
    let n = g.n();
    if n < 2 {
        return Err(Error::Precondition("need at least two nodes".into()));
    }
    let sym = laplacian_unchecked(
        g,
        LaplacianParams {
            gamma: p.gamma,
            alpha: 0.5,
        },
    );
    let (eigenvalues, mut vectors) = symmetric_eigen(&sym)?;
    let s = shifted_degrees(g, p.gamma);
    let scale_diag: Vec<f64> = s.iter().map(|x| x.powf(0.5 - p.alpha)).collect();

    for k in 0..n {
        let scaled: Vec<f64> = (0..n).map(|i| scale_diag[i] * vectors[[i, k]]).collect();
        if scaled[dominant_index(&scaled)] < 0.0 {
            vectors.column_mut(k).mapv_inplace(|x| -x);
        }
    }

    if eigenvalues[1] <= ZERO_EIGENVALUE_TOL {
        return Err(Error::Disconnected {
            components: eigenvalues
                .iter()
                .filter(|&&l| l <= ZERO_EIGENVALUE_TOL)
                .count(),
        });
    }
    let degenerate = n > 2 && (eigenvalues[2] - eigenvalues[1]) < ZERO_EIGENVALUE_TOL;
    if degenerate {
        log::warn!(
            "smallest positive eigenvalue {:.6e} is repeated; using the first solver eigenvector",
            eigenvalues[1]
        );
    }
    let phi1 = (0..n).map(|i| scale_diag[i] * vectors[[i, 1]]).collect();
    Ok(SpectralBundle {
        params: p,
        eigenvalues,
        sym_eigvecs: vectors,
        scale_diag,
        phi1,
        degenerate,
    })
}

/// Relative Frobenius distance between `L(alpha, gamma) / gamma` and the
/// combinatorial Laplacian, one entry per `gamma`.
pub fn limit_check_combinatorial(g: &Graph, alpha: f64, gammas: &[f64]) -> Result<Vec<f64>> {
    check_spectral_input(g, DEFAULT_MAX_DENSE_NODES)?;
    let l = combinatorial_laplacian(g);
    let norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
    gammas
        .iter()
        .map(|&gamma| {
            let p = LaplacianParams::new(gamma, alpha)?;
            let lp = laplacian_unchecked(g, p);
            let diff = lp
                .iter()
                .zip(l.iter())
                .map(|(a, b)| {
                    let d = a / gamma - b;
                    d * d
                })
                .sum::<f64>()
                .sqrt();
            Ok(diff / norm)
        })
        .collect()
}

/// Natural log of the diffusion distance, computed without underflow.
/// Returns `-inf` when the distance is exactly zero.
pub fn ln_diffusion_distance(b: &SpectralBundle, i: usize, j: usize, t: f64) -> Result<f64> {
    b.require_random_walk()?;
    b.check_node(i)?;
    b.check_node(j)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("diffusion time t = {t}")));
    }
    if i == j {
        return Ok(f64::NEG_INFINITY);
    }
    let logs: Vec<f64> = (1..b.n())
        .filter_map(|k| {
            let diff = b.entry(i, k) - b.entry(j, k);
            (diff != 0.0).then(|| 2.0 * diff.abs().ln() - 2.0 * t * b.eigenvalues[k])
        })
        .collect();
    let Some(max) = logs.iter().copied().reduce(f64::max) else {
        return Ok(f64::NEG_INFINITY);
    };
    let sum: f64 = logs.iter().map(|x| (x - max).exp()).sum();
    Ok(0.5 * (max + sum.ln()))
}

/// `sqrt(sum_{k>=1} exp(-2 t lambda_k) (phi_k[i] - phi_k[j])^2)` over the
/// eigenpairs of `L(1, gamma)`.
pub fn diffusion_distance(b: &SpectralBundle, i: usize, j: usize, t: f64) -> Result<f64> {
    Ok(ln_diffusion_distance(b, i, j, t)?.exp())
}

/// `|phi1[i] - phi1[j]|`.
pub fn spectral_distance(b: &SpectralBundle, i: usize, j: usize) -> Result<f64> {
    b.check_node(i)?;
    b.check_node(j)?;
    Ok((b.phi1[i] - b.phi1[j]).abs())
}

/// Diffusion time after which a node `m` spectrally closer to `j` than `i`
/// is also closer in diffusion distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateBound {
    /// Threshold, clamped at zero; the ordering holds for every `t > c`.
    pub c: f64,
    /// Unclamped value of the log-ratio expression, when it is defined.
    pub raw: Option<f64>,
    /// Gap in squared first-mode differences.
    pub numerator: f64,
    /// Sum of absolute squared-difference gaps over the higher modes.
    pub denominator: f64,
}

impl SurrogateBound {
    /// `floor(c) + 1`.
    pub fn first_time(&self) -> f64 {
        self.c.floor() + 1.0
    }

    pub fn is_vacuous(&self) -> bool {
        self.raw.is_none()
    }
}

pub fn surrogate_constant(
    b: &SpectralBundle,
    i: usize,
    j: usize,
    m: usize,
) -> Result<SurrogateBound> {
    b.require_random_walk()?;
    let ds_ij = spectral_distance(b, i, j)?;
    let ds_mj = spectral_distance(b, m, j)?;
    if !(ds_mj < ds_ij) {
        return Err(Error::Precondition(format!(
            "spectral distance d_s({m},{j}) = {ds_mj:e} is not below d_s({i},{j}) = {ds_ij:e}"
        )));
    }
    let sq = |a: usize, k: usize| {
        let d = b.entry(a, k) - b.entry(j, k);
        d * d
    };
    let numerator = sq(i, 1) - sq(m, 1);
    let denominator: f64 = (2..b.n()).map(|k| (sq(m, k) - sq(i, k)).abs()).sum();
    if denominator == 0.0 {
        return Ok(SurrogateBound {
            c: 0.0,
            raw: None,
            numerator,
            denominator,
        });
    }
    let gap = b.eigenvalues[1] - b.eigenvalues[2];
    let log_ratio = (numerator / denominator).ln();
    if gap.abs() <= ZERO_EIGENVALUE_TOL * 1e-4 {
        // With lambda_1 == lambda_2 the bound is time independent.
        if log_ratio >= 0.0 {
            return Ok(SurrogateBound {
                c: 0.0,
                raw: None,
                numerator,
                denominator,
            });
        }
        return Err(Error::Degenerate(
            "lambda_1 equals lambda_2 and the higher modes dominate; no finite time bound".into(),
        ));
    }
    let raw = log_ratio / (2.0 * gap);
    Ok(SurrogateBound {
        c: raw.max(0.0),
        raw: Some(raw),
        numerator,
        denominator,
    })
}

/// Graph vector field of a node signal together with the directional
/// average and derivative matrices, stored along the CSR layout of the graph
/// it was built on.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalField {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    /// `phi[j] - phi[i]` for each CSR entry `(i, j)`.
    pub grad: Vec<f64>,
    /// `grad` divided by the row L1 norm plus `eps0`.
    pub grad_rownorm: Vec<f64>,
    /// `|grad_rownorm|`.
    pub b_av: Vec<f64>,
    /// Off-diagonal part of `B_dx`, equal to `grad_rownorm`.
    pub b_dx_offdiag: Vec<f64>,
    /// Diagonal of `B_dx`: minus the row sum of `grad_rownorm`.
    pub b_dx_diag: Vec<f64>,
    pub eps0: f64,
}

impl DirectionalField {
    pub fn n(&self) -> usize {
        self.b_dx_diag.len()
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn b_av_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n(), self.n()));
        for i in 0..self.n() {
            for e in self.row(i) {
                m[[i, self.targets[e]]] = self.b_av[e];
            }
        }
        m
    }

    pub fn b_dx_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n(), self.n()));
        for i in 0..self.n() {
            for e in self.row(i) {
                m[[i, self.targets[e]]] += self.b_dx_offdiag[e];
            }
            m[[i, i]] += self.b_dx_diag[i];
        }
        m
    }
}

pub fn directional_field(g: &Graph, phi: &[f64], eps0: f64) -> Result<DirectionalField> {
    if phi.len() != g.n() {
        return Err(Error::Shape(format!(
            "signal has {} entries for {} nodes",
            phi.len(),
            g.n()
        )));
    }
    if !(eps0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps0 = {eps0}")));
    }
    let offsets = g.offsets().to_vec();
    let targets = g.targets().to_vec();
    let mut grad = vec![0.0; targets.len()];
    let mut grad_rownorm = vec![0.0; targets.len()];
    let mut b_dx_diag = vec![0.0; g.n()];
    for i in 0..g.n() {
        let row = offsets[i]..offsets[i + 1];
        let mut l1 = 0.0;
        for e in row.clone() {
            grad[e] = phi[targets[e]] - phi[i];
            l1 += grad[e].abs();
        }
        let denom = l1 + eps0;
        let mut sum = 0.0;
        for e in row {
            grad_rownorm[e] = if denom > 0.0 { grad[e] / denom } else { 0.0 };
            sum += grad_rownorm[e];
        }
        b_dx_diag[i] = -sum;
    }
    let b_av = grad_rownorm.iter().map(|x| x.abs()).collect();
    let b_dx_offdiag = grad_rownorm.clone();
    Ok(DirectionalField {
        offsets,
        targets,
        grad,
        grad_rownorm,
        b_av,
        b_dx_offdiag,
        b_dx_diag,
        eps0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn p2() -> Graph {
        build_graph(2, &[(0, 1)]).unwrap()
    }
    fn p3() -> Graph {
        build_graph(3, &[(0, 1), (1, 2)]).unwrap()
    }
    fn k3() -> Graph {
        build_graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn assert_matrix(m: &Array2<f64>, want: &[&[f64]], tol: f64) {
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!(
                    (m[[i, j]] - w).abs() <= tol,
                    "({i},{j}) = {} vs {w}",
                    m[[i, j]]
                );
            }
        }
    }

    #[test]
    fn params_validate_ranges() {
        assert!(LaplacianParams::new(0.0, 1.0).is_err());
        assert!(LaplacianParams::new(1.1, 1.0).is_err());
        assert!(LaplacianParams::new(0.5, -0.1).is_err());
        assert!(LaplacianParams::new(f64::NAN, 0.5).is_err());
        assert!(LaplacianParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn special_cases() {
        let l = parameterized_laplacian(&p2(), LaplacianParams::new(1.0, 1.0).unwrap()).unwrap();
        assert_matrix(&l, &[&[1.0, -1.0], &[-1.0, 1.0]], 1e-15);
        let l = parameterized_laplacian(&k3(), LaplacianParams::new(1.0, 0.5).unwrap()).unwrap();
        assert_matrix(
            &l,
            &[&[1.0, -0.5, -0.5], &[-0.5, 1.0, -0.5], &[-0.5, -0.5, 1.0]],
            1e-15,
        );
        // S = 1.5 I, so L(1, 1/2) = 0.5 * (1/1.5) * L = L / 3.
        let l = parameterized_laplacian(&k3(), LaplacianParams::new(0.5, 1.0).unwrap()).unwrap();
        let (d, o) = (2.0 / 3.0, -1.0 / 3.0);
        assert_matrix(&l, &[&[d, o, o], &[o, d, o], &[o, o, d]], 1e-15);
    }

    #[test]
    fn adjacency_examples() {
        let p = parameterized_adjacency(&p2(), LaplacianParams::new(1.0, 1.0).unwrap()).unwrap();
        assert_matrix(&p, &[&[0.0, 1.0], &[1.0, 0.0]], 1e-15);
        let p = parameterized_adjacency(&k3(), LaplacianParams::new(0.5, 1.0).unwrap()).unwrap();
        let t = 1.0 / 3.0;
        assert_matrix(&p, &[&[t, t, t], &[t, t, t], &[t, t, t]], 1e-15);
    }

    #[test]
    fn rejects_disconnected_and_isolated() {
        let two = build_graph(4, &[(0, 1), (2, 3)]).unwrap();
        let p = LaplacianParams::random_walk(1.0).unwrap();
        assert!(matches!(
            parameterized_laplacian(&two, p),
            Err(Error::Disconnected { components: 2 })
        ));
        let iso = build_graph(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            eigendecompose(&iso, p),
            Err(Error::IsolatedNode(2))
        ));
        assert!(matches!(
            eigendecompose_with_limit(&k3(), p, 2),
            Err(Error::TooLarge { n: 3, limit: 2 })
        ));
    }

    #[test]
    fn small_spectra() {
        let b = eigendecompose(&p2(), LaplacianParams::random_walk(1.0).unwrap()).unwrap();
        assert!(b.eigenvalues[0].abs() < 1e-12);
        assert!((b.eigenvalues[1] - 2.0).abs() < 1e-12);

        let half = eigendecompose(&k3(), LaplacianParams::new(0.5, 0.5).unwrap()).unwrap();
        for (got, want) in half.eigenvalues.iter().zip([0.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(half.degenerate);
        let one = eigendecompose(&k3(), LaplacianParams::new(1.0, 0.5).unwrap()).unwrap();
        assert!((one.eigenvalues[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn phi1_is_canonical() {
        let b = eigendecompose(&p3(), LaplacianParams::random_walk(1.0).unwrap()).unwrap();
        let k = dominant_index(&b.phi1);
        assert!(b.phi1[k] > 0.0);
    }

    #[test]
    fn regular_graph_limit_closed_form() {
        // For a d-regular graph and alpha = 1, L(1, gamma) / gamma = L / (1 + gamma (d - 1)).
        let gammas = [1e-2, 1e-4, 1e-6];
        let errs = limit_check_combinatorial(&k3(), 1.0, &gammas).unwrap();
        for (e, g) in errs.iter().zip(gammas) {
            let want = g * 1.0 / (1.0 + g * 1.0);
            assert!(
                (e - want).abs() < 1e-12 * want.max(1e-12) + 1e-15,
                "{e} vs {want}"
            );
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        assert!(errs[2] < 1e-4);
    }

    #[test]
    fn diffusion_distance_p3() {
        // L_rw(P3) has eigenvalues 0, 1, 2 with eigenvectors (1,1,1), (1,0,-1),
        // (1,-1,1) up to scale. The symmetric basis uses D^(1/2)-orthonormal
        // scaling: phi_k = D^(-1/2) u_k with u_k unit in the symmetric problem.
        // u_1 = (1,0,-1)/sqrt(2) -> phi_1 = (1,0,-1)/sqrt(2)
        // u_2 = (1,-sqrt2,1)/2  -> phi_2 = (1,-1,1)/2
        let b = eigendecompose(&p3(), LaplacianParams::random_walk(1.0).unwrap()).unwrap();
        let want = ((-2.0f64).exp() * 2.0).sqrt(); // (phi1_0 - phi1_2)^2 = 2, phi2 equal at 0 and 2.
        let got = diffusion_distance(&b, 0, 2, 1.0).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert_eq!(diffusion_distance(&b, 1, 1, 3.0).unwrap(), 0.0);
        let ds = spectral_distance(&b, 0, 2).unwrap();
        assert!((ds - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(spectral_distance(&b, 2, 0).unwrap(), ds);
    }

    #[test]
    fn diffusion_requires_random_walk() {
        let b = eigendecompose(&p3(), LaplacianParams::new(1.0, 0.5).unwrap()).unwrap();
        assert!(matches!(
            diffusion_distance(&b, 0, 1, 1.0),
            Err(Error::NotRandomWalk(_))
        ));
    }

    #[test]
    fn surrogate_rejects_violated_hypothesis() {
        let b = eigendecompose(&p3(), LaplacianParams::random_walk(1.0).unwrap()).unwrap();
        // d_s(0,1) == d_s(2,1) by symmetry: the hypothesis fails.
        assert!(matches!(
            surrogate_constant(&b, 0, 1, 2),
            Err(Error::Precondition(_))
        ));
        // m = 1 sits between: d_s(1, 2) < d_s(0, 2).
        let c = surrogate_constant(&b, 0, 2, 1).unwrap();
        let t = c.first_time();
        assert!(
            diffusion_distance(&b, 1, 2, t).unwrap() < diffusion_distance(&b, 0, 2, t).unwrap()
        );
    }

    #[test]
    fn surrogate_vacuous_when_higher_modes_agree() {
        // On P3, nodes 0 and 2 share phi_2, so with j = 1 and (i, m) = (0, 1)...
        // use P2 instead: no higher modes at all.
        let b = eigendecompose(&p2(), LaplacianParams::random_walk(1.0).unwrap()).unwrap();
        let c = surrogate_constant(&b, 0, 1, 1).unwrap();
        assert!(c.is_vacuous());
        assert_eq!(c.c, 0.0);
        assert!(
            diffusion_distance(&b, 1, 1, 1.0).unwrap() < diffusion_distance(&b, 0, 1, 1.0).unwrap()
        );
    }

    #[test]
    fn field_on_p2() {
        let f = directional_field(&p2(), &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(f.grad, vec![1.0, -1.0]);
        assert_eq!(f.b_av, vec![1.0, 1.0]);
        assert_matrix(&f.b_dx_dense(), &[&[-1.0, 1.0], &[-1.0, 1.0]], 0.0);
    }

    #[test]
    fn constant_signal_field_is_zero() {
        let f = directional_field(&k3(), &[2.5, 2.5, 2.5], DEFAULT_EPS0).unwrap();
        assert!(f
            .grad
            .iter()
            .chain(&f.b_av)
            .chain(&f.b_dx_offdiag)
            .chain(&f.b_dx_diag)
            .all(|&x| x == 0.0));
    }
}
