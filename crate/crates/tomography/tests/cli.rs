//! The `tomography` binary end to end: artifacts, overrides and exit codes.

use std::path::Path;
use std::process::{Command, Output};

const QUADRATIC: &str = r#"{
  "name": "cli-quadratic",
  "seed": 21,
  "runs": 4,
  "experiment": {
    "spectrum": {"bimodal": {"dimension": 20, "num_small": 10, "lambda_small": 0.01, "lambda_large": 10.0}},
    "dims": {"from": 2, "to": 20, "step": 2},
    "epsilons": {"log_from": 0.05, "log_to": 5.0, "count": 4}
  }
}"#;

fn tomography(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomography"))
        .args(args)
        .env_remove("TOMOGRAPHY_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn quadratic_sweep_writes_its_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUADRATIC);
    let out = dir.path().join("out");
    let o = tomography(&["quadratic-sweep", "--config", &config, "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let listed = String::from_utf8(o.stdout).unwrap();
    for f in ["runs.csv", "grid.csv", "thresholds.csv", "bounds.csv", "phase.svg", "metadata.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
        assert!(listed.contains(f), "{f} not listed");
    }
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(runs.starts_with("experiment,kind,t,d,run,seed,best_loss,best_acc\n"));
    assert_eq!(runs.lines().count(), 1 + 10 * 4);
    let svg = std::fs::read_to_string(out.join("phase.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("well-formed SVG");
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("rect")).count(), 10 * 4);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 21);
    assert_eq!(meta["experiment"], "quadratic-sweep");
}

#[test]
fn seed_and_worker_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUADRATIC);
    let run = |name: &str, extra: &[&str], env_workers: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tomography"));
        cmd.args(["quadratic-sweep", "--config", &config, "--out", out.to_str().unwrap()]).args(extra);
        match env_workers {
            Some(w) => cmd.env("TOMOGRAPHY_WORKERS", w),
            None => cmd.env_remove("TOMOGRAPHY_WORKERS"),
        };
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
        (std::fs::read(out.join("runs.csv")).unwrap(), meta)
    };
    let (base, _) = run("base", &[], None);
    let (reseeded, meta) = run("reseeded", &["--seed", "22"], None);
    assert_ne!(base, reseeded);
    assert_eq!(meta["seed"], 22);
    let (env, meta) = run("env", &[], Some("3"));
    assert_eq!(meta["workers"], 3);
    assert_eq!(env, base);
    let (flag, meta) = run("flag", &["--workers", "2"], Some("3"));
    assert_eq!(meta["workers"], 2);
    assert_eq!(flag, base);
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = tomography(&["width-estimate", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("/nonexistent/config.json"));
}

#[test]
fn invalid_config_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config =
        write_config(dir.path(), &QUADRATIC.replace(r#""runs": 4"#, r#""runs": 4, "colour": "red""#));
    let o = tomography(&["quadratic-sweep", "--config", &config]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let config = write_config(dir.path(), &QUADRATIC.replace(r#""step": 2"#, r#""step": 0"#));
    let o = tomography(&["quadratic-sweep", "--config", &config]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("experiment.dims"), "{}", stderr(&o));
}

#[test]
fn oversized_dimension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &QUADRATIC.replace(r#""to": 20"#, r#""to": 30"#));
    let out = dir.path().join("out");
    let o = tomography(&["quadratic-sweep", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn runtime_failures_exit_with_their_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"name": "guarded", "seed": 1, "runs": 1, "experiment": {
        "data": {"blobs": {"classes": 3, "per_class": 10, "input_dim": 4, "separation": 3.0}},
        "hidden": [8], "model": {"linearized": {"reference_epochs": 1, "jacobian_limit_bytes": 1024}},
        "dims": [1], "thresholds": {"accuracy": [0.5]}}}"#;
    let config = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let o = tomography(&["nn-sweep", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("1024"), "{}", stderr(&o));
}

#[test]
fn usage_errors_come_from_the_parser() {
    let o = tomography(&["quadratic-sweep"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tomography(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}
