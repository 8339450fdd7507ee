mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use dgat_core::experiment::RewireChoice;
use dgat_core::nn::AttentionMode;
use dgat_core::spectral::DEFAULT_EPS0;
use dgat_core::RewireMode;

/// Exit status for a sweep in which some cells failed.
pub const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dgat",
    version,
    about = "Spectral rewiring and directional graph attention"
)]
pub struct Cli {
    /// Seed for generation and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// File of `key = value` lines mirroring the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files (stdout otherwise).
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic node-classification dataset.
    Synth(SynthArgs),
    /// Homophily measures of a labeled graph.
    Metrics(MetricsArgs),
    /// Eigenpairs of L(alpha, gamma).
    Spectral(SpectralArgs),
    /// Prune or add edges using the first non-trivial eigenvector.
    Rewire(RewireArgs),
    /// Train a classifier and write its run record and checkpoint.
    Train(TrainArgs),
    /// Accuracy of a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Summary table of finished runs.
    Report(ReportArgs),
    /// Seeded sweep over mu, gamma and seeds.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    /// Probability weight of attaching to a same-class node.
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 2)]
    pub edges_per_node: usize,
    #[arg(long, default_value_t = 2)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub feature_std: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Dataset or labeled graph JSON.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Graph JSON, dataset JSON or edge list.
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Also write every eigenvector of L(alpha, gamma).
    #[arg(long)]
    pub vectors: bool,
    /// Keep only the largest connected component.
    #[arg(long)]
    pub largest_component: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RewireArgs {
    /// Graph JSON, dataset JSON or edge list.
    pub graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value = "heterophily_prune_and_add")]
    pub rewire_mode: RewireMode,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Use this quantile of the edges' spectral distances as epsilon.
    #[arg(long)]
    pub epsilon_quantile: Option<f64>,
    #[arg(long)]
    pub largest_component: bool,
    /// Rewired graph (`.json` or edge list).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Record of pruned and added edges.
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// Concatenate each node's own projection with the aggregate.
    #[arg(long)]
    pub sep: bool,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 8)]
    pub heads: usize,
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.001)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_EPS0)]
    pub eps0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset JSON.
    pub dataset: PathBuf,
    #[arg(long, default_value = "dgat")]
    pub mode: AttentionMode,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value = "none")]
    pub rewire_mode: RewireMode,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub largest_component: bool,
    /// Run record (per-step losses, best step, test accuracy).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Checkpoint path; defaults to `checkpoint.json` in the output directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset JSON.
    pub dataset: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// train, val, test or all.
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub largest_component: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run reports or cell files.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Markdown table.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Machine-readable summary.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub mus: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    )]
    pub gammas: Vec<f64>,
    /// Explicit seed list; otherwise `--num-seeds` seeds from `--seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, default_value_t = 5)]
    pub num_seeds: u64,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    #[arg(long, default_value_t = 2)]
    pub edges_per_node: usize,
    #[arg(long, default_value_t = 2)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub feature_std: f64,
    /// `auto` or a rewire mode.
    #[arg(long, default_value = "none")]
    pub rewire: RewireChoice,
    #[arg(long)]
    pub epsilon_quantile: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
}

fn parse() -> Result<Cli, ExitCode> {
    let cmd = Cli::command().args_override_self(true);
    let args = match config::expand(&cmd, std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Err(ExitCode::from(1));
        }
    };
    match cmd
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => Ok(cli),
        Err(e) => {
            let _ = e.print();
            Err(ExitCode::from(if e.use_stderr() { 1 } else { 0 }))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<dgat_core::Error>() {
        Some(err) if err.is_numeric() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match parse() {
        Ok(c) => c,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
