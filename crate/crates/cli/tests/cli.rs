use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dgat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = dgat(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small_dataset(dir: &Path, name: &str, seed: &str) {
    ok(
        dir,
        &[
            "--seed",
            seed,
            "synth",
            "--n",
            "60",
            "--classes",
            "3",
            "--mu",
            "0.8",
            "-o",
            name,
        ],
    );
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), "a.json", "4");
    small_dataset(dir.path(), "b.json", "4");
    small_dataset(dir.path(), "c.json", "5");
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    assert_ne!(a, fs::read(dir.path().join("c.json")).unwrap());
    let stdout = ok(
        dir.path(),
        &[
            "--seed",
            "4",
            "synth",
            "--n",
            "60",
            "--classes",
            "3",
            "--mu",
            "0.8",
        ],
    )
    .stdout;
    assert_eq!(stdout, a);
}

#[test]
fn train_then_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    small_dataset(p, "d.json", "1");
    ok(
        p,
        &[
            "train",
            "d.json",
            "--steps",
            "15",
            "--heads",
            "2",
            "--hidden",
            "4",
            "--gamma",
            "0.5",
            "--out-dir",
            "run",
        ],
    );
    let run = read_json(&p.join("run/run.json"));
    assert_eq!(run["steps"].as_array().unwrap().len(), 15);
    assert_eq!(run["preprocessing"]["gamma"], 0.5);
    let ck = read_json(&p.join("run/checkpoint.json"));
    assert_eq!(ck["format"], "dgat-checkpoint");
    assert_eq!(ck["version"], 1);

    let out = ok(
        p,
        &["eval", "d.json", "--checkpoint", "run/checkpoint.json"],
    );
    let eval: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(eval["accuracy"], run["test_accuracy"]);

    ok(p, &["report", "run/run.json", "--json", "summary.json"]);
    let summary = read_json(&p.join("summary.json"));
    assert_eq!(summary["aggregates"][0]["gamma_best"], 0.5);
    assert!(summary["aggregates"][0]["gat"].is_null());
}

#[test]
fn config_file_sets_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    small_dataset(p, "d.json", "2");
    fs::write(
        p.join("run.cfg"),
        "# small run\nsteps = 4\nheads = 1\nhidden = 2\nsep = true\nmode = gat\nlr = 0.5\n",
    )
    .unwrap();
    ok(
        p,
        &[
            "--config",
            "run.cfg",
            "train",
            "d.json",
            "--lr",
            "0.25",
            "-o",
            "run.json",
            "--checkpoint",
            "ck.json",
        ],
    );
    let run = read_json(&p.join("run.json"));
    assert_eq!(run["steps"].as_array().unwrap().len(), 4);
    assert_eq!(run["config"]["aggregation"], "sep");
    assert_eq!(run["config"]["mode"], "gat");
    assert_eq!(run["config"]["learning_rate"], 0.25);

    fs::write(p.join("bad.cfg"), "no_such_flag = 1\n").unwrap();
    let out = dgat(p, &["--config", "bad.cfg", "train", "d.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-flag"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(dgat(p, &["--help"]).status.code(), Some(0));
    assert_eq!(dgat(p, &["train"]).status.code(), Some(1));
    assert_eq!(dgat(p, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(dgat(p, &["metrics", "missing.json"]).status.code(), Some(1));
    small_dataset(p, "d.json", "3");
    let out = dgat(
        p,
        &[
            "train",
            "d.json",
            "--lr",
            "1e300",
            "--steps",
            "3",
            "--checkpoint",
            "ck.json",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn disconnected_graphs_need_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("g.txt"), "0 1\n1 2\n2 0\n3 4\n").unwrap();
    let out = dgat(p, &["spectral", "g.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--largest-component"));
    let out = ok(
        p,
        &["spectral", "g.txt", "--largest-component", "--vectors"],
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["nodes"], serde_json::json!([0, 1, 2]));
    let eig = v["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 3);
    assert!(eig[0].as_f64().unwrap().abs() < 1e-12);
    assert!((eig[1].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn metrics_and_rewire() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("lg.json"),
        r#"{"n": 4, "edges": [[0,1],[1,2],[2,3],[3,0]], "labels": [0,0,1,1]}"#,
    )
    .unwrap();
    let v: Value = serde_json::from_slice(&ok(p, &["metrics", "lg.json"]).stdout).unwrap();
    assert_eq!(v["h_edge"], 0.5);
    assert_eq!(v["h_node"], 0.5);

    fs::write(
        p.join("one.json"),
        r#"{"n": 2, "edges": [[0,1]], "labels": [0,0]}"#,
    )
    .unwrap();
    let v: Value = serde_json::from_slice(&ok(p, &["metrics", "one.json"]).stdout).unwrap();
    assert!(v["h_edge_adjusted"].is_null());
    assert!(v["undefined"]["h_edge_adjusted"].is_string());

    small_dataset(p, "d.json", "6");
    ok(
        p,
        &[
            "rewire",
            "d.json",
            "--rewire-mode",
            "heterophily_prune",
            "--epsilon-quantile",
            "0.5",
            "--out-dir",
            "rw",
        ],
    );
    let plan = read_json(&p.join("rw/plan.json"));
    let before = read_json(&p.join("d.json"))["edges"]
        .as_array()
        .unwrap()
        .len();
    let after = read_json(&p.join("rw/rewired.json"))["edges"]
        .as_array()
        .unwrap()
        .len();
    assert_eq!(before - after, plan["pruned"].as_array().unwrap().len());
    assert!(plan["added"].as_array().unwrap().is_empty());
}

#[test]
fn experiment_resumes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = [
        "experiment",
        "--mus",
        "0.2,0.8",
        "--gammas",
        "0.5,1.0",
        "--seeds",
        "1,2",
        "--n",
        "30",
        "--classes",
        "3",
        "--steps",
        "5",
        "--heads",
        "1",
        "--hidden",
        "2",
        "--out-dir",
        "exp",
    ];
    ok(p, &args);
    let report = read_json(&p.join("exp/report.json"));
    assert_eq!(report["cells"].as_array().unwrap().len(), 2 * 2 * 3);
    assert_eq!(report["failures"], 0);
    assert_eq!(fs::read_dir(p.join("exp/cells")).unwrap().count(), 12);

    let first = fs::read(p.join("exp/report.json")).unwrap();
    ok(p, &args);
    assert_eq!(fs::read(p.join("exp/report.json")).unwrap(), first);

    let out = ok(p, &["report", "exp/report.json"]);
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.starts_with("| mu | GAT |"));
    assert_eq!(md.lines().count(), 4);
}

#[test]
fn failed_cells_give_partial_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dgat(
        dir.path(),
        &[
            "experiment",
            "--mus",
            "0.5",
            "--gammas",
            "1.0",
            "--seeds",
            "0",
            "--n",
            "30",
            "--classes",
            "3",
            "--steps",
            "3",
            "--lr",
            "1e300",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["failures"], 2);
}
