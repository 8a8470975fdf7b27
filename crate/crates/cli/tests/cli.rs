use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "[generate]\nobservations = 300\n[model.reservoir]\nsize = 30\n[model.time_encoding]\nmode = \"multi_frequency\"\ndim = 16\n";

fn teesn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teesn"))
        .args(args)
        .current_dir(dir)
        .env_remove("TEESN_OUT")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = teesn(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn small_config(dir: &Path) -> String {
    std::fs::write(dir.join("small.toml"), SMALL).unwrap();
    "small.toml".into()
}

#[test]
fn generate_is_deterministic_and_records_drawn_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "mg", "--length", "1000", "--seed", "7", "--out", "a"]);
    ok(d, &["generate", "mg", "--length", "1000", "--seed", "7", "--out", "b"]);
    assert_eq!(read(d.join("a/mg.csv")), read(d.join("b/mg.csv")));
    assert_eq!(read(d.join("a/mg.csv")).lines().count(), 1001);
    assert!(read(d.join("a/mg.meta.json")).contains("\"seed\": 7"));

    ok(d, &["generate", "mg", "--out", "c"]);
    let cfg: toml::Value = toml::from_str(&read(d.join("c/config.toml"))).unwrap();
    let seed = cfg["seed"].as_integer().expect("drawn seed recorded");
    assert!(read(d.join("c/mg.meta.json")).contains(&format!("\"seed\": {seed}")));
}

#[test]
fn generate_rejects_length_below_the_delay() {
    let dir = tempfile::tempdir().unwrap();
    let out = teesn(dir.path(), &["generate", "mg", "--length", "100", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau/delta"));
}

#[test]
fn train_and_evaluate_are_byte_identical_across_reruns_and_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    for (out, extra) in [("r1", None), ("r2", None), ("r3", Some("--sequential"))] {
        let mut args = vec!["--config", cfg.as_str(), "--seed", "5", "--out", out, "train"];
        args.extend(extra);
        ok(d, &args);
        let model = format!("{out}/model.json");
        let ev = format!("{out}/eval");
        ok(d, &["--config", &cfg, "--seed", "5", "--out", &ev, "evaluate", "--model", &model]);
    }
    for file in ["model.json", "train_report.json", "eval/predictions.csv", "eval/evaluate_report.json"] {
        let a = read(d.join("r1").join(file));
        assert_eq!(a, read(d.join("r2").join(file)), "{file}");
        assert_eq!(a, read(d.join("r3").join(file)), "{file}");
    }
}

#[test]
fn evaluating_the_training_slice_reproduces_the_train_score() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    ok(d, &["--config", &cfg, "--seed", "2", "--out", "t", "train"]);
    ok(d, &["--config", &cfg, "--seed", "2", "--out", "e", "evaluate", "--model", "t/model.json", "--range", "train"]);
    let value = |p: &str| -> f64 {
        let v: serde_json::Value = serde_json::from_str(&read(d.join(p))).unwrap();
        v["report"]["value"].as_f64().unwrap()
    };
    assert!(value("e/evaluate_report.json") <= value("t/train_report.json") + 1e-9);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    ok(d, &["--config", &cfg, "--out", "first", "train", "--ridge", "0.5"]);
    let resolved = read(d.join("first/config.toml"));
    assert!(resolved.contains("ridge = 0.5"));
    assert!(resolved.contains("size = 30"));
    ok(d, &["--config", "first/config.toml", "--out", "second", "train"]);
    assert_eq!(read(d.join("first/model.json")), read(d.join("second/model.json")));
}

#[test]
fn ablate_flag_is_recorded_and_changes_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    ok(d, &["--config", &cfg, "--seed", "4", "--out", "full", "train"]);
    ok(d, &["--config", &cfg, "--seed", "4", "--out", "ab", "train", "--ablate", "no-ls"]);
    assert!(read(d.join("ab/config.toml")).contains("ablations = [\"no-ls\"]"));
    let model: serde_json::Value = serde_json::from_str(&read(d.join("ab/model.json"))).unwrap();
    assert_eq!(model["config"]["reservoir"]["leaky_rate"], 1.0);
    assert_ne!(read(d.join("full/model.json")), read(d.join("ab/model.json")));
    let out = teesn(d, &["--out", "x", "train", "--ablate", "no-xx"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn predict_writes_one_step_forecasts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    ok(d, &["--config", &cfg, "--seed", "6", "--out", "t", "train"]);
    ok(d, &["--config", &cfg, "--seed", "6", "--out", "p", "predict", "--model", "t/model.json"]);
    let csv = read(d.join("p/predictions.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,predicted,actual"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == 3 && r.iter().all(|v| v.is_finite())));
}

#[test]
fn cross_validation_writes_a_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    ok(d, &["--config", &cfg, "--seed", "1", "--out", "cv", "evaluate", "--variant", "te-esn", "--variant", "no-te"]);
    let csv = read(d.join("cv/summary.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,metric,mean,std");
    assert!(lines[1].starts_with("te-esn,mse,"));
    assert!(lines[2].starts_with("no-te,mse,"));
}

#[test]
fn mc_reports_each_variant() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--seed", "3", "--out", "m", "mc", "--size", "30", "--k-max", "20", "--variant", "te-esn", "--variant", "esn"]);
    let csv = read(d.join("m/mc.csv"));
    let rows: Vec<(String, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (n, v) = l.split_once(',').unwrap();
            (n.to_string(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(), ["te-esn", "esn"]);
    assert!(rows.iter().all(|r| (0.0..=21.0).contains(&r.1)));
}

#[test]
fn search_writes_trace_and_a_loadable_best_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = small_config(d);
    ok(d, &["--config", &cfg, "--seed", "1", "--out", "s", "search", "--population", "4", "--generations", "3"]);
    let trace = read(d.join("s/search_trace.csv"));
    assert_eq!(trace.lines().next(), Some("generation,best,mean"));
    assert_eq!(trace.lines().count(), 4);
    ok(d, &["--config", "s/best_config.toml", "--out", "b", "train"]);
}

#[test]
fn curve_writes_one_file_per_base_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["--out", "c", "curve", "--k", "1", "--k", "4"]);
    for k in [1, 4] {
        let csv = read(d.join(format!("c/curve_k{k}.csv")));
        assert_eq!(csv.lines().next(), Some("p,dot"));
        // dot product at distance 0 is the number of complex components
        assert_eq!(csv.lines().nth(1), Some("0,32"));
    }
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_teesn"))
        .args(["--seed", "1", "generate", "mg"])
        .current_dir(d)
        .env("TEESN_OUT", d.join("envout"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.join("envout/mg.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(teesn(d, &["--help"]).status.code(), Some(0));
    assert_eq!(teesn(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(teesn(d, &["train", "--spectral-radius", "5"]).status.code(), Some(1));
    assert_eq!(teesn(d, &["predict", "--model", "missing.json"]).status.code(), Some(2));
    assert_eq!(teesn(d, &["train", "--data", "missing.csv"]).status.code(), Some(2));
    assert_eq!(teesn(d, &["--config", "missing.toml", "train"]).status.code(), Some(2));
    std::fs::write(d.join("typo.toml"), "sede = 1\n").unwrap();
    assert_eq!(teesn(d, &["--config", "typo.toml", "train"]).status.code(), Some(1));
    // a history far outside the attractor diverges on the first Euler step
    std::fs::write(d.join("diverge.toml"), "[generate.mg]\ny0 = 100.0\n").unwrap();
    assert_eq!(teesn(d, &["--config", "diverge.toml", "--seed", "1", "generate", "mg"]).status.code(), Some(3));
}
