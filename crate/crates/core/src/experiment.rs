//! Seeded sweep over homophily coefficients, Laplacian parameters and seeds.
//!
//! For every `(mu, seed)` a synthetic graph is generated once; a plain
//! attention baseline and one directional model per `gamma` are trained on
//! it. Each finished cell is written to `<out_dir>/cells/` and reused by a
//! later run with the same cell settings, so an interrupted sweep resumes
//! where it stopped.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io::write_json;
use crate::nn::{train, AttentionMode, GraphInput, Preprocessing, TrainConfig};
use crate::rewire::{rewire, rewire_with_signal, RewireMode, RewirePlan};
use crate::spectral::{eigendecompose, LaplacianParams, DEFAULT_EPS0};
use crate::synth::{generate, NodeDataset, Split, SynthConfig};

/// Rewiring applied before the directional models.
///
/// `Auto` estimates edge homophily from the edges whose endpoints both carry
/// training labels: below one half the graph is treated as heterophilic and
/// gets heterophily pruning with edge adding, otherwise it is left as is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RewireChoice {
    Auto,
    Fixed(RewireMode),
}

impl RewireChoice {
    pub fn resolve(&self, d: &NodeDataset) -> RewireMode {
        match *self {
            RewireChoice::Fixed(m) => m,
            RewireChoice::Auto => {
                if train_edge_homophily(d).is_some_and(|h| h < 0.5) {
                    RewireMode::HeterophilyPruneAndAdd
                } else {
                    RewireMode::None
                }
            }
        }
    }
}

impl fmt::Display for RewireChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewireChoice::Auto => f.write_str("auto"),
            RewireChoice::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for RewireChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            Ok(RewireChoice::Auto)
        } else {
            s.parse().map(RewireChoice::Fixed)
        }
    }
}

impl TryFrom<String> for RewireChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RewireChoice> for String {
    fn from(c: RewireChoice) -> String {
        c.to_string()
    }
}

/// Edge homophily over edges with both endpoints in the training split.
pub fn train_edge_homophily(d: &NodeDataset) -> Option<f64> {
    let train = Split::mask(&d.split.train, d.n());
    let (mut same, mut total) = (0usize, 0usize);
    for &(u, v) in d.graph.edges() {
        if train[u] && train[v] {
            total += 1;
            same += usize::from(d.labels[u] == d.labels[v]);
        }
    }
    (total > 0).then(|| same as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mus: Vec<f64>,
    pub gammas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template for the generator; `mu` and `seed` are set per cell.
    pub synth: SynthConfig,
    /// Template for training; `mode` and `seed` are set per cell.
    pub train: TrainConfig,
    pub alpha: f64,
    pub eps0: f64,
    pub rewire: RewireChoice,
    pub epsilon: f64,
    /// When set, the pruning threshold of each graph is this quantile of its
    /// edges' spectral distances and `epsilon` is ignored.
    pub epsilon_quantile: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            mus: vec![0.1, 0.5, 0.9],
            gammas: (1..=10).map(|k| k as f64 / 10.0).collect(),
            seeds: (0..5).collect(),
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            alpha: 1.0,
            eps0: DEFAULT_EPS0,
            rewire: RewireChoice::Fixed(RewireMode::None),
            epsilon: 0.0,
            epsilon_quantile: None,
            out_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mus.is_empty() || self.gammas.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "experiment grids must be non-empty".into(),
            ));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::InvalidParameter(
                "experiment seeds must be distinct".into(),
            ));
        }
        for &mu in &self.mus {
            SynthConfig { mu, ..self.synth }.validate()?;
        }
        for &gamma in &self.gammas {
            LaplacianParams::new(gamma, self.alpha)?;
        }
        if let Some(q) = self.epsilon_quantile {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon quantile {q} outside [0, 1]"
                )));
            }
        }
        if self.rewire != RewireChoice::Fixed(RewireMode::None) && self.alpha != 1.0 {
            return Err(Error::InvalidParameter("rewiring needs alpha = 1".into()));
        }
        self.train.validate()
    }

    fn cell_settings(&self, mu: f64, seed: u64, gamma: Option<f64>) -> CellSettings {
        CellSettings {
            mu,
            seed,
            gamma,
            synth: SynthConfig {
                mu,
                seed,
                ..self.synth
            },
            train: TrainConfig {
                mode: if gamma.is_some() {
                    AttentionMode::Dgat
                } else {
                    AttentionMode::Gat
                },
                seed,
                ..self.train
            },
            alpha: self.alpha,
            eps0: self.eps0,
            rewire: self.rewire,
            epsilon: self.epsilon,
            epsilon_quantile: self.epsilon_quantile,
        }
    }
}

/// Everything that determines one cell's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSettings {
    pub mu: f64,
    pub seed: u64,
    /// `None` for the plain attention baseline.
    pub gamma: Option<f64>,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub alpha: f64,
    pub eps0: f64,
    pub rewire: RewireChoice,
    pub epsilon: f64,
    pub epsilon_quantile: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub settings: CellSettings,
    pub test_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub best_step: Option<usize>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn model(&self) -> AttentionMode {
        self.settings.train.mode
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std, count })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaStat {
    pub gamma: f64,
    pub accuracy: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuAggregate {
    pub mu: f64,
    pub gat: Option<Stat>,
    pub dgat: Vec<GammaStat>,
    /// Gamma with the highest mean directional accuracy (lowest gamma on ties).
    pub gamma_best: Option<f64>,
    /// Gamma with the lowest mean directional accuracy (lowest gamma on ties).
    pub gamma_worst: Option<f64>,
}

impl MuAggregate {
    fn stat_at(&self, gamma: Option<f64>) -> Option<Stat> {
        let g = gamma?;
        self.dgat.iter().find(|s| s.gamma == g).map(|s| s.accuracy)
    }

    pub fn best(&self) -> Option<Stat> {
        self.stat_at(self.gamma_best)
    }

    pub fn worst(&self) -> Option<Stat> {
        self.stat_at(self.gamma_worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<MuAggregate>,
    pub failures: usize,
}

fn push_unique(values: &mut Vec<f64>, x: f64) {
    if !values.contains(&x) {
        values.push(x);
    }
}

/// Groups successful cells by `mu` and `gamma`. Failed cells are ignored.
pub fn aggregate(cells: &[CellResult]) -> Vec<MuAggregate> {
    let mut mus = Vec::new();
    for c in cells {
        push_unique(&mut mus, c.settings.mu);
    }
    mus.sort_by(f64::total_cmp);
    mus.into_iter()
        .map(|mu| {
            let at_mu: Vec<&CellResult> = cells.iter().filter(|c| c.settings.mu == mu).collect();
            let acc = |pred: &dyn Fn(&CellResult) -> bool| -> Vec<f64> {
                at_mu
                    .iter()
                    .filter(|c| pred(c))
                    .filter_map(|c| c.test_accuracy)
                    .collect()
            };
            let gat = Stat::of(&acc(&|c| c.settings.gamma.is_none()));
            let mut gammas = Vec::new();
            for c in &at_mu {
                if let Some(g) = c.settings.gamma {
                    push_unique(&mut gammas, g);
                }
            }
            gammas.sort_by(f64::total_cmp);
            let dgat: Vec<GammaStat> = gammas
                .into_iter()
                .filter_map(|g| {
                    Stat::of(&acc(&|c| c.settings.gamma == Some(g)))
                        .map(|accuracy| GammaStat { gamma: g, accuracy })
                })
                .collect();
            let mut best: Option<&GammaStat> = None;
            let mut worst: Option<&GammaStat> = None;
            for s in &dgat {
                if best.is_none_or(|b| s.accuracy.mean > b.accuracy.mean) {
                    best = Some(s);
                }
                if worst.is_none_or(|w| s.accuracy.mean < w.accuracy.mean) {
                    worst = Some(s);
                }
            }
            MuAggregate {
                mu,
                gat,
                gamma_best: best.map(|s| s.gamma),
                gamma_worst: worst.map(|s| s.gamma),
                dgat,
            }
        })
        .collect()
}

pub fn build_report(mut cells: Vec<CellResult>) -> RunReport {
    cells.sort_by(|a, b| {
        let key = |c: &CellResult| {
            (
                c.settings.mu,
                c.settings.seed,
                c.settings.gamma.unwrap_or(-1.0),
            )
        };
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
    });
    let failures = cells.iter().filter(|c| c.error.is_some()).count();
    RunReport {
        aggregates: aggregate(&cells),
        cells,
        failures,
    }
}

fn cell_file(dir: &Path, s: &CellSettings) -> PathBuf {
    let model = match s.gamma {
        Some(g) => format!("dgat_g{g}"),
        None => "gat".to_string(),
    };
    dir.join(format!("mu{}_seed{}_{}.json", s.mu, s.seed, model))
}

fn load_cell(path: &Path, settings: &CellSettings) -> Option<CellResult> {
    let text = fs::read_to_string(path).ok()?;
    let cell: CellResult = serde_json::from_str(&text).ok()?;
    (cell.settings == *settings && cell.error.is_none()).then_some(cell)
}

/// Nearest-rank quantile of `|phi_u - phi_v|` over the edges of `g`.
pub fn edge_distance_quantile(g: &Graph, phi: &[f64], q: f64) -> f64 {
    let mut ds: Vec<f64> = g
        .edges()
        .iter()
        .map(|&(u, v)| (phi[u] - phi[v]).abs())
        .collect();
    if ds.is_empty() {
        return 0.0;
    }
    ds.sort_by(f64::total_cmp);
    let rank = ((q * ds.len() as f64).ceil() as usize).clamp(1, ds.len());
    ds[rank - 1]
}

/// Builds the model input for `mode` from a raw graph: the spectral bundle
/// of `L(alpha, gamma)`, optional rewiring, self-loops and, for directional
/// attention, the edge features. Plain attention without rewiring skips the
/// eigendecomposition.
pub fn prepare_input(
    g: &Graph,
    mode: AttentionMode,
    p: &Preprocessing,
) -> Result<(GraphInput, Option<RewirePlan>)> {
    if mode == AttentionMode::Gat && p.rewire_mode == RewireMode::None {
        return Ok((GraphInput::plain(g)?, None));
    }
    let bundle = eigendecompose(g, LaplacianParams::new(p.gamma, p.alpha)?)?;
    let plan = if p.rewire_mode == RewireMode::None {
        None
    } else {
        Some(rewire(g, &bundle, p.rewire_mode, p.epsilon)?)
    };
    let rewired = plan.as_ref().map_or(g, |plan| &plan.result);
    let input = match mode {
        AttentionMode::Gat => GraphInput::plain(rewired)?,
        AttentionMode::Dgat => GraphInput::with_signal(rewired, &bundle.phi1, p.eps0)?,
    };
    Ok((input, plan))
}

fn run_cell(settings: &CellSettings, dataset: &NodeDataset) -> Result<CellResult> {
    let input = match settings.gamma {
        None => GraphInput::plain(&dataset.graph)?,
        Some(gamma) => {
            let bundle =
                eigendecompose(&dataset.graph, LaplacianParams::new(gamma, settings.alpha)?)?;
            let phi = &bundle.phi1;
            let mode = settings.rewire.resolve(dataset);
            let rewired = if mode == RewireMode::None {
                dataset.graph.clone()
            } else {
                let epsilon = match settings.epsilon_quantile {
                    Some(q) => edge_distance_quantile(&dataset.graph, phi, q),
                    None => settings.epsilon,
                };
                rewire_with_signal(&dataset.graph, phi, mode, epsilon)?.result
            };
            GraphInput::with_signal(&rewired, phi, settings.eps0)?
        }
    };
    let out = train(dataset, &input, &settings.train)?;
    Ok(CellResult {
        settings: settings.clone(),
        test_accuracy: Some(out.trace.test_accuracy),
        val_accuracy: Some(out.trace.best_val_accuracy),
        best_step: Some(out.trace.best_step),
        error: None,
    })
}

fn failed(settings: &CellSettings, e: &Error) -> CellResult {
    CellResult {
        settings: settings.clone(),
        test_accuracy: None,
        val_accuracy: None,
        best_step: None,
        error: Some(e.to_string()),
    }
}

/// Runs every cell of the grid. Cell failures are recorded in the report and
/// do not stop the sweep.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let cell_dir = match &spec.out_dir {
        Some(d) => {
            let dir = d.join("cells");
            fs::create_dir_all(&dir)?;
            Some(dir)
        }
        None => None,
    };
    let groups: Vec<(f64, u64)> = spec
        .mus
        .iter()
        .flat_map(|&mu| spec.seeds.iter().map(move |&s| (mu, s)))
        .collect();
    let cells: Vec<CellResult> = groups
        .par_iter()
        .flat_map_iter(|&(mu, seed)| {
            let all: Vec<CellSettings> = std::iter::once(None)
                .chain(spec.gammas.iter().map(|&g| Some(g)))
                .map(|g| spec.cell_settings(mu, seed, g))
                .collect();
            let mut dataset: Option<Result<NodeDataset>> = None;
            all.into_iter()
                .map(|settings| {
                    let path = cell_dir.as_ref().map(|d| cell_file(d, &settings));
                    if let Some(done) = path.as_ref().and_then(|p| load_cell(p, &settings)) {
                        return done;
                    }
                    let data = dataset.get_or_insert_with(|| generate(&settings.synth));
                    let result = match data {
                        Ok(d) => run_cell(&settings, d).unwrap_or_else(|e| failed(&settings, &e)),
                        Err(e) => failed(&settings, e),
                    };
                    if let Some(p) = &path {
                        if let Err(e) = write_json(p, &result) {
                            log::warn!("could not write {}: {e}", p.display());
                        }
                    }
                    result
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let report = build_report(cells);
    if let Some(d) = &spec.out_dir {
        write_json(&d.join("report.json"), &report)?;
        fs::write(d.join("report.md"), render_markdown(&report))?;
    }
    Ok(report)
}

/// Loads experiment reports, single cell files or `train` run records and
/// merges their cells.
pub fn load_cells(paths: &[PathBuf]) -> Result<Vec<CellResult>> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no run files given".into()));
    }
    let mut cells = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
        if value.get("cells").is_some() {
            let r: RunReport = serde_json::from_value(value)
                .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
            cells.extend(r.cells);
        } else if let Some(cell) = value.get("cell") {
            if cell.is_null() {
                return Err(Error::Format(format!(
                    "{}: run was not trained on a synthetic dataset, so it has no mu to tabulate",
                    p.display()
                )));
            }
            let c: CellResult = serde_json::from_value(cell.clone())
                .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
            cells.push(c);
        } else {
            let c: CellResult = serde_json::from_value(value)
                .map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
            cells.push(c);
        }
    }
    Ok(cells)
}

fn pct(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.2} ± {:.2}", 100.0 * s.mean, 100.0 * s.std),
        None => "-".to_string(),
    }
}

fn gamma(g: Option<f64>) -> String {
    g.map_or("-".to_string(), |g| format!("{g}"))
}

/// Test accuracy (%) per homophily coefficient.
pub fn render_markdown(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(
        "| mu | GAT | DGAT (best gamma) | best gamma | DGAT (worst gamma) | worst gamma |\n",
    );
    out.push_str("|---|---|---|---|---|---|\n");
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            a.mu,
            pct(a.gat),
            pct(a.best()),
            gamma(a.gamma_best),
            pct(a.worst()),
            gamma(a.gamma_worst)
        );
    }
    if report.failures > 0 {
        let _ = writeln!(out, "\n{} cell(s) failed.", report.failures);
    }
    out
}
