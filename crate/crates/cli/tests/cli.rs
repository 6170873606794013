use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn affilkg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affilkg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const TRUTH: &str = "person,relation,club\n\
John Smith,member,Denver Athletic Club\n\
Mary Jones,member,Denver Athletic Club\n\
Mary Jones,member,Univ Club\n\
Ann Lee,member,Univ Club\n";

fn fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("truth.csv"), TRUTH).unwrap();
    fs::write(
        dir.path().join("pred.csv"),
        "person,relation,club\n\
         John Smith,member,Denver Athletic Club (DAC)\n\
         Mary Jones,member,University Club\n\
         Bob Brown,member,Nowhere\n",
    )
    .unwrap();
    dir
}

#[test]
fn evaluate_writes_report() {
    let dir = fixture();
    let out = affilkg(
        dir.path(),
        &["evaluate", "--pred", "pred.csv", "--truth", "truth.csv", "--out", "r.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["true_positives"], 2);
    assert_eq!(r["false_positives"], serde_json::json!([2]));
    assert!((r["precision"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((r["recall"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn evaluate_fp_sample_is_seeded() {
    let dir = fixture();
    let run = || {
        affilkg(
            dir.path(),
            &["evaluate", "--pred", "pred.csv", "--truth", "truth.csv", "--fp-sample", "1", "--seed", "5"],
        )
        .stdout
    };
    let first = run();
    assert_eq!(first, run());
    let r: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(r["false_positive_sample"][0]["person"], "Bob Brown");
}

#[test]
fn logs_are_json_lines_on_stderr() {
    let dir = fixture();
    let out = affilkg(dir.path(), &["evaluate", "--pred", "pred.csv", "--truth", "truth.csv"]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(!stderr.trim().is_empty());
    for line in stderr.lines() {
        serde_json::from_str::<Value>(line).expect("log line is JSON");
    }
    serde_json::from_slice::<Value>(&out.stdout).expect("stdout is the report");
}

#[test]
fn metrics_without_truth_omit_rmae() {
    let dir = fixture();
    let out = affilkg(dir.path(), &["metrics", "--graph", "truth.csv", "--out", "m.json"]);
    assert!(out.status.success());
    let m = json(&dir.path().join("m.json"));
    assert!(m.get("rmae_all_clubs").is_none());
    assert_eq!(m["num_connected_components"], 1);
    assert_eq!(m["bipartite_density"], 4.0 / 6.0);

    let out = affilkg(
        dir.path(),
        &["metrics", "--graph", "truth.csv", "--truth", "truth.csv", "--out", "m.json"],
    );
    assert!(out.status.success());
    assert_eq!(json(&dir.path().join("m.json"))["rmae_all_clubs"], 0.0);
}

#[test]
fn project_onto_clubs() {
    let dir = fixture();
    let out = affilkg(
        dir.path(),
        &["project", "--graph", "truth.csv", "--onto", "club", "--out", "p.json"],
    );
    assert!(out.status.success());
    let p = json(&dir.path().join("p.json"));
    assert_eq!(p["partition"], "club");
    assert_eq!(p["edges"], serde_json::json!([[0, 1]]));
}

#[test]
fn simulate_is_deterministic_and_hits_budget() {
    let dir = fixture();
    let args = [
        "simulate", "--graph", "truth.csv", "--model", "node-add", "--precision", "0.5", "--recall", "0.5",
        "--seed", "9", "--out", "g.json", "--metrics-out", "gm.json", "--report-out", "rep.json",
    ];
    assert!(affilkg(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("g.json")).unwrap();
    let rep = json(&dir.path().join("rep.json"));
    assert_eq!(rep["budget"]["e_keep"], 2);
    assert_eq!(rep["budget"]["e_add"], 2);
    assert_eq!(rep["achieved"]["true_positives"], 2);
    assert_eq!(rep["achieved"]["false_positives"], 2);
    assert!(json(&dir.path().join("gm.json"))["rmae_all_clubs"].is_number());
    assert!(affilkg(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("g.json")).unwrap());
}

#[test]
fn bias_csv_and_json() {
    let dir = fixture();
    let records = [
        r#"{"metric":"d","truth":2.0,"extracted":1.0,"rel_bias":-0.5,"rel_mae":0.5,"f1":0.95,"bin":"[0.92,1.00)","graph_id":"g","run_id":"a"}"#,
        r#"{"metric":"d","truth":2.0,"extracted":3.0,"rel_bias":0.5,"rel_mae":0.5,"f1":0.5,"bin":"[0.40,0.76)","graph_id":"g","run_id":"b"}"#,
    ];
    fs::write(dir.path().join("r.jsonl"), records.join("\n") + "\n").unwrap();
    assert!(affilkg(dir.path(), &["bias", "--records", "r.jsonl", "--out", "t.csv"]).status.success());
    let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.starts_with("bin,metric,mean_rel_bias,mean_rel_mae,n\n"));
    assert_eq!(csv.lines().count(), 3);
    assert!(affilkg(dir.path(), &["bias", "--records", "r.jsonl", "--out", "t.json"]).status.success());
    assert!(dir.path().join("t.json").is_file());
    let bad = affilkg(dir.path(), &["bias", "--records", "r.jsonl", "--out", "t.txt"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = fixture();
    assert_eq!(affilkg(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        affilkg(dir.path(), &["metrics", "--graph", "missing.csv"]).status.code(),
        Some(1)
    );
    let bad_p = [
        "simulate", "--graph", "truth.csv", "--model", "random", "--precision", "0", "--recall", "1", "--out",
        "g.json",
    ];
    assert_eq!(affilkg(dir.path(), &bad_p).status.code(), Some(2));
    let out = affilkg(dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

fn experiment_config(dir: &Path, runs: Value) {
    let cfg = serde_json::json!({
        "truth": "truth.csv",
        "runs": runs,
        "output_dir": "out",
    });
    fs::write(dir.join("exp.json"), cfg.to_string()).unwrap();
}

#[test]
fn experiment_runs_and_reruns_from_manifest() {
    let dir = fixture();
    experiment_config(
        dir.path(),
        serde_json::json!([
            {"model": "node-add", "precision": 0.8, "recall": 0.75, "replicates": 2, "base_seed": 1},
            {"model": "node-split", "precision": 0.8, "recall": 0.75, "replicates": 2, "base_seed": 1}
        ]),
    );
    let out = affilkg(dir.path(), &["--jobs", "2", "experiment", "--config", "exp.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 4);
    let table = fs::read(dir.path().join("out/bias_table.csv")).unwrap();

    let rerun = affilkg(
        dir.path(),
        &["experiment", "--config", "out/manifest.json", "--output-dir", "again"],
    );
    assert!(rerun.status.success());
    assert_eq!(table, fs::read(dir.path().join("again/bias_table.csv")).unwrap());
}

#[test]
fn experiment_with_every_run_failing_exits_one() {
    let dir = fixture();
    // 4 edges at recall 0.1 keep none, which no model accepts.
    experiment_config(
        dir.path(),
        serde_json::json!([{"model": "random", "precision": 0.9, "recall": 0.1, "replicates": 2}]),
    );
    let out = affilkg(dir.path(), &["experiment", "--config", "exp.json"]);
    assert_eq!(out.status.code(), Some(1));
    let manifest = json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["failed"], 2);
}
