use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use dgat_core::experiment::{
    build_report, edge_distance_quantile, load_cells, prepare_input, render_markdown,
    run_experiment, CellResult, CellSettings, ExperimentSpec, RewireChoice,
};
use dgat_core::graph::largest_component;
use dgat_core::io::{
    read_dataset, read_graph, read_labeled_graph, write_dataset, write_graph, write_json,
};
use dgat_core::metrics::{
    adjusted_edge_homophily, aggregation_homophily, class_homophily, edge_homophily,
    label_informativeness, node_homophily,
};
use dgat_core::nn::{evaluate, train, Aggregation, AttentionMode, Preprocessing, TrainConfig};
use dgat_core::{
    connectivity, eigendecompose, generate, rewire, Checkpoint, Graph, LaplacianParams,
    NodeDataset, RewireMode, SynthConfig,
};

use crate::{Cli, Command, ModelArgs, EXIT_PARTIAL};

pub fn run(cli: &Cli) -> Result<u8> {
    let out = Output {
        dir: cli.out_dir.clone(),
    };
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Synth(a) => {
            let cfg = SynthConfig {
                n: a.n,
                classes: a.classes,
                mu: a.mu,
                edges_per_node: a.edges_per_node,
                feature_dim: a.feature_dim,
                feature_std: a.feature_std,
                seed,
            };
            let d = generate(&cfg)?;
            match out.path(&a.output, "dataset.json")? {
                Some(p) => write_dataset(&p, &d)?,
                None => stdout(&dgat_core::io::dataset_to_json(&d)?)?,
            }
        }
        Command::Metrics(a) => {
            let lg = read_labeled_graph(&a.input).with_context(|| a.input.display().to_string())?;
            let mut values = serde_json::Map::new();
            let mut undefined = serde_json::Map::new();
            values.insert("n".into(), json!(lg.n()));
            values.insert("edges".into(), json!(lg.graph.num_edges()));
            values.insert(
                "components".into(),
                json!(connectivity(&lg.graph).component_count),
            );
            values.insert("h_node".into(), json!(node_homophily(&lg)));
            for (name, v) in [
                ("h_edge", edge_homophily(&lg)),
                ("h_edge_adjusted", adjusted_edge_homophily(&lg)),
                ("h_class", class_homophily(&lg)),
                ("label_informativeness", label_informativeness(&lg)),
            ] {
                match v {
                    Ok(x) => {
                        values.insert(name.into(), json!(x));
                    }
                    Err(e) => {
                        values.insert(name.into(), Value::Null);
                        undefined.insert(name.into(), json!(e.to_string()));
                    }
                }
            }
            values.insert("h_agg".into(), json!(aggregation_homophily(&lg)));
            if !undefined.is_empty() {
                values.insert("undefined".into(), Value::Object(undefined));
            }
            out.emit(&a.output, "metrics.json", &Value::Object(values))?;
        }
        Command::Spectral(a) => {
            let (g, kept) = load_graph(&a.graph, a.largest_component)?;
            let b = eigendecompose(&g, LaplacianParams::new(a.gamma, a.alpha)?)
                .map_err(disconnected_hint)?;
            let mut v = json!({
                "n": g.n(),
                "gamma": a.gamma,
                "alpha": a.alpha,
                "eigenvalues": b.eigenvalues,
                "phi1": b.phi1,
                "degenerate": b.degenerate,
            });
            if let Some(k) = kept {
                v["nodes"] = json!(k);
            }
            if a.vectors {
                let vectors: Vec<Vec<f64>> = (0..b.n()).map(|k| b.eigenvector(k)).collect();
                v["eigenvectors"] = json!(vectors);
            }
            out.emit(&a.output, "spectral.json", &v)?;
        }
        Command::Rewire(a) => {
            let (g, kept) = load_graph(&a.graph, a.largest_component)?;
            let b = eigendecompose(&g, LaplacianParams::random_walk(a.gamma)?)
                .map_err(disconnected_hint)?;
            let epsilon = match a.epsilon_quantile {
                Some(q) => {
                    if !(0.0..=1.0).contains(&q) {
                        bail!(dgat_core::Error::InvalidParameter(format!(
                            "epsilon quantile {q} outside [0, 1]"
                        )));
                    }
                    edge_distance_quantile(&g, &b.phi1, q)
                }
                None => a.epsilon,
            };
            let plan = rewire(&g, &b, a.rewire_mode, epsilon)?;
            let mut record = serde_json::to_value(plan.record())?;
            record["gamma"] = json!(a.gamma);
            if let Some(k) = kept {
                record["nodes"] = json!(k);
            }
            let graph_path = out.path(&a.output, "rewired.json")?;
            let plan_path = match (&a.plan, &out.dir) {
                (Some(p), _) => Some(p.clone()),
                (None, Some(d)) => Some(d.join("plan.json")),
                (None, None) => None,
            };
            if let Some(p) = &graph_path {
                write_graph(p, &plan.result)?;
            }
            match &plan_path {
                Some(p) => write_json(p, &record)?,
                None if graph_path.is_none() => {
                    record["graph"] =
                        serde_json::from_str(&dgat_core::io::graph_to_json(&plan.result)?)?;
                    stdout(&pretty(&record)?)?;
                }
                None => {}
            }
        }
        Command::Train(a) => {
            let d = load_dataset(&a.dataset, a.largest_component)?;
            let cfg = train_config(&a.model, a.mode, seed);
            let pre = Preprocessing {
                gamma: a.gamma,
                alpha: a.model.alpha,
                eps0: a.model.eps0,
                rewire_mode: a.rewire_mode,
                epsilon: a.model.epsilon,
            };
            let (input, plan) = prepare_input(&d.graph, a.mode, &pre).map_err(disconnected_hint)?;
            let result = train(&d, &input, &cfg)?;
            let ck_path = match (&a.checkpoint, &out.dir) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => dir.join("checkpoint.json"),
                (None, None) => PathBuf::from("checkpoint.json"),
            };
            out.ensure_dir()?;
            Checkpoint::from_model(&result.best, Some(pre))
                .save(&ck_path)
                .with_context(|| format!("writing {}", ck_path.display()))?;
            let cell = d.meta.as_ref().map(|m| CellResult {
                settings: CellSettings {
                    mu: m.config.mu,
                    seed: m.config.seed,
                    gamma: (a.mode == AttentionMode::Dgat).then_some(a.gamma),
                    synth: m.config,
                    train: cfg,
                    alpha: pre.alpha,
                    eps0: pre.eps0,
                    rewire: RewireChoice::Fixed(pre.rewire_mode),
                    epsilon: pre.epsilon,
                    epsilon_quantile: None,
                },
                test_accuracy: Some(result.trace.test_accuracy),
                val_accuracy: Some(result.trace.best_val_accuracy),
                best_step: Some(result.trace.best_step),
                error: None,
            });
            let record = json!({
                "config": cfg,
                "preprocessing": pre,
                "nodes": d.n(),
                "rewire": plan.map(|p| p.record()),
                "checkpoint": ck_path,
                "best_step": result.trace.best_step,
                "best_val_accuracy": result.trace.best_val_accuracy,
                "best_val_loss": result.trace.best_val_loss,
                "test_accuracy": result.trace.test_accuracy,
                "steps": result.trace.steps,
                "cell": cell,
            });
            log::info!(
                "best step {} val {:.4} test {:.4}",
                result.trace.best_step,
                result.trace.best_val_accuracy,
                result.trace.test_accuracy
            );
            out.emit(&a.output, "run.json", &record)?;
        }
        Command::Eval(a) => {
            let ck = Checkpoint::load(&a.checkpoint)
                .with_context(|| a.checkpoint.display().to_string())?;
            let model = ck.to_model()?;
            let d = load_dataset(&a.dataset, a.largest_component)?;
            let pre = match (ck.preprocessing, model.config.mode) {
                (Some(p), _) => p,
                (None, AttentionMode::Gat) => Preprocessing {
                    gamma: 1.0,
                    alpha: 1.0,
                    eps0: dgat_core::spectral::DEFAULT_EPS0,
                    rewire_mode: RewireMode::None,
                    epsilon: 0.0,
                },
                (None, AttentionMode::Dgat) => {
                    bail!(dgat_core::Error::Format(
                        "directional checkpoint lacks preprocessing".into()
                    ))
                }
            };
            let nodes: Vec<usize> = match a.split.as_str() {
                "train" => d.split.train.clone(),
                "val" => d.split.val.clone(),
                "test" => d.split.test.clone(),
                "all" => (0..d.n()).collect(),
                other => bail!(dgat_core::Error::InvalidParameter(format!(
                    "unknown split '{other}'"
                ))),
            };
            let (input, _) =
                prepare_input(&d.graph, model.config.mode, &pre).map_err(disconnected_hint)?;
            let acc = evaluate(&model, &d, &input, &nodes)?;
            out.emit(
                &a.output,
                "eval.json",
                &json!({ "split": a.split, "nodes": nodes.len(), "accuracy": acc }),
            )?;
        }
        Command::Report(a) => {
            let report = build_report(load_cells(&a.runs)?);
            let md = render_markdown(&report);
            let summary = json!({ "aggregates": report.aggregates, "failures": report.failures });
            let json_path = match (&a.json, &out.dir) {
                (Some(p), _) => Some(p.clone()),
                (None, Some(d)) => Some(d.join("report.json")),
                (None, None) => None,
            };
            if let Some(p) = json_path {
                out.ensure_dir()?;
                write_json(&p, &summary)?;
            }
            match out.path(&a.output, "report.md")? {
                Some(p) => fs::write(p, md)?,
                None => stdout(&md)?,
            }
        }
        Command::Experiment(a) => {
            let seeds = match &a.seeds {
                Some(s) => s.clone(),
                None => (seed..seed + a.num_seeds).collect(),
            };
            let spec = ExperimentSpec {
                mus: a.mus.clone(),
                gammas: a.gammas.clone(),
                seeds,
                synth: SynthConfig {
                    n: a.n,
                    classes: a.classes,
                    edges_per_node: a.edges_per_node,
                    feature_dim: a.feature_dim,
                    feature_std: a.feature_std,
                    ..SynthConfig::default()
                },
                train: train_config(&a.model, AttentionMode::Dgat, seed),
                alpha: a.model.alpha,
                eps0: a.model.eps0,
                rewire: a.rewire,
                epsilon: a.model.epsilon,
                epsilon_quantile: a.epsilon_quantile,
                out_dir: out.dir.clone(),
            };
            let report = run_experiment(&spec)?;
            if out.dir.is_none() {
                stdout(&pretty(&report)?)?;
            }
            eprint!("{}", render_markdown(&report));
            if report.failures > 0 {
                for c in report.cells.iter().filter(|c| c.error.is_some()) {
                    log::warn!(
                        "mu {} seed {} gamma {:?}: {}",
                        c.settings.mu,
                        c.settings.seed,
                        c.settings.gamma,
                        c.error.as_deref().unwrap_or("")
                    );
                }
                return Ok(EXIT_PARTIAL);
            }
        }
    }
    Ok(0)
}

fn train_config(m: &ModelArgs, mode: AttentionMode, seed: u64) -> TrainConfig {
    TrainConfig {
        mode,
        aggregation: if m.sep {
            Aggregation::Sep
        } else {
            Aggregation::Plain
        },
        learning_rate: m.lr,
        weight_decay: m.weight_decay,
        dropout: m.dropout,
        steps: m.steps,
        layers: m.layers,
        heads: m.heads,
        hidden: m.hidden,
        seed,
        ..TrainConfig::default()
    }
}

fn disconnected_hint(e: dgat_core::Error) -> anyhow::Error {
    let hint = matches!(e, dgat_core::Error::Disconnected { .. });
    let err = anyhow::Error::from(e);
    if hint {
        err.context("spectral input must be connected; pass --largest-component to keep the largest component")
    } else {
        err
    }
}

fn load_graph(path: &Path, largest: bool) -> Result<(Graph, Option<Vec<usize>>)> {
    let g = read_graph(path).with_context(|| path.display().to_string())?;
    if !largest || connectivity(&g).is_connected() {
        return Ok((g, None));
    }
    let nodes = largest_component(&g);
    log::info!("keeping {} of {} nodes", nodes.len(), g.n());
    Ok((g.induced(&nodes), Some(nodes)))
}

fn load_dataset(path: &Path, largest: bool) -> Result<NodeDataset> {
    let d = read_dataset(path).with_context(|| path.display().to_string())?;
    if !largest || connectivity(&d.graph).is_connected() {
        return Ok(d);
    }
    let nodes = largest_component(&d.graph);
    log::info!("keeping {} of {} nodes", nodes.len(), d.n());
    Ok(d.induced(&nodes))
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to stdout; a closed pipe is not an error.
fn stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn ensure_dir(&self) -> Result<()> {
        if let Some(d) = &self.dir {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(())
    }

    /// Explicit path, else `default` inside the output directory, else none
    /// (stdout).
    fn path(&self, explicit: &Option<PathBuf>, default: &str) -> Result<Option<PathBuf>> {
        self.ensure_dir()?;
        Ok(explicit
            .clone()
            .or_else(|| self.dir.as_ref().map(|d| d.join(default))))
    }

    fn emit<T: Serialize>(
        &self,
        explicit: &Option<PathBuf>,
        default: &str,
        value: &T,
    ) -> Result<()> {
        match self.path(explicit, default)? {
            Some(p) => write_json(&p, value).with_context(|| format!("writing {}", p.display()))?,
            None => stdout(&pretty(value)?)?,
        }
        Ok(())
    }
}
