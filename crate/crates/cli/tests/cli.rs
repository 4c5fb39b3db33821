//! Black-box tests of the installed binary: exit codes, artifact layout,
//! and rerun reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_flowsentry"));
    for var in [
        "FLOWSENTRY_CONFIG",
        "FLOWSENTRY_SEED",
        "FLOWSENTRY_OUT",
        "FLOWSENTRY_MODE",
        "FLOWSENTRY_MODEL",
        "FLOWSENTRY_SCENARIO",
    ] {
        cmd.env_remove(var);
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn assert_code(output: &Output, expected: i32) {
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Small synthetic task every command can chew through quickly.
fn write_config(dir: &Path) -> PathBuf {
    let config = r#"{
      "data": {"synthetic": {"class_counts": {
        "Normal": 60, "Nmri": 12, "Cmri": 12, "Msci": 12, "Mpci": 12, "Mfci": 12,
        "Dos": 30, "Recon": 30
      }}},
      "seed": 41,
      "model": {"conv1_filters": 8, "conv2_filters": 8, "fc1_units": 16,
                "epochs": 30, "batch_size": 16}
    }"#;
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    path
}

#[test]
fn unknown_flags_are_usage_errors() {
    let output = run(&["train", "--bogus"]);
    assert_code(&output, 1);
}

#[test]
fn missing_subcommand_shows_help_without_failing() {
    let output = run(&[]);
    assert_code(&output, 0);
}

#[test]
fn missing_config_file_is_a_data_error() {
    let output = run(&["prepare", "--config", "/nonexistent/config.json", "--out", "/tmp/x"]);
    assert_code(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("cannot read config"));
}

#[test]
fn prepare_writes_three_splits_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&["prepare", "--config", config.to_str().unwrap(), "--out",
            out.to_str().unwrap()]);
        assert_code(&output, 0);
    }
    for name in ["train.jsonl", "validation.jsonl", "test.jsonl", "preprocess.json"] {
        let a = fs::read(out_a.join("prepared").join(name)).unwrap();
        let b = fs::read(out_b.join("prepared").join(name)).unwrap();
        assert!(!a.is_empty(), "{name} empty");
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn train_writes_model_and_curve_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&["train", "--config", config.to_str().unwrap(), "--out",
            out.to_str().unwrap()]);
        assert_code(&output, 0);
    }
    let model_a = fs::read(out_a.join("model_binary.json")).unwrap();
    let model_b = fs::read(out_b.join("model_binary.json")).unwrap();
    assert_eq!(model_a, model_b, "model files differ between identical runs");

    let curve = fs::read_to_string(out_a.join("epochs_binary.csv")).unwrap();
    assert_eq!(curve.lines().count(), 31, "header plus one row per epoch");
    assert_eq!(curve, fs::read_to_string(out_b.join("epochs_binary.csv")).unwrap());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run_with_seed = |out: &Path, seed: &str| {
        let output = run(&["train", "--config", config.to_str().unwrap(), "--seed", seed,
            "--out", out.to_str().unwrap()]);
        assert_code(&output, 0);
    };
    run_with_seed(&out_a, "41");
    run_with_seed(&out_b, "99");
    let a = fs::read(out_a.join("model_binary.json")).unwrap();
    let b = fs::read(out_b.join("model_binary.json")).unwrap();
    assert_ne!(a, b, "different seeds should train different weights");
}

#[test]
fn eval_scores_a_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    assert_code(&run(&["train", "--config", config.to_str().unwrap(), "--out",
        out.to_str().unwrap()]), 0);
    let model = out.join("model_binary.json");
    let output = run(&["eval", "--config", config.to_str().unwrap(), "--model",
        model.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_code(&output, 0);
    let csv = fs::read_to_string(out.join("metrics_binary.csv")).unwrap();
    assert!(csv.starts_with("class,precision_pct,recall_pct,f1_pct,support"));
    assert_eq!(csv.lines().count(), 4, "two classes plus header and macro row");
    assert!(out.join("metrics_binary.json").exists());
}

#[test]
fn eval_rejects_feature_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    assert_code(&run(&["train", "--config", config.to_str().unwrap(), "--out",
        out.to_str().unwrap()]), 0);
    // A model that selects feature 60 cannot score 27-feature records.
    let mut model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_binary.json")).unwrap())
            .unwrap();
    model["preprocess"]["kept_indices"][0] = serde_json::json!(60);
    let mismatched = dir.path().join("mismatched_model.json");
    fs::write(&mismatched, serde_json::to_string_pretty(&model).unwrap()).unwrap();
    let output = run(&["eval", "--config", config.to_str().unwrap(), "--model",
        mismatched.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_code(&output, 2);
    assert!(String::from_utf8_lossy(&output.stderr).contains("index 60"));
}

#[test]
fn compare_emits_one_row_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&["compare", "--config", config.to_str().unwrap(), "--out",
        out.to_str().unwrap()]);
    assert_code(&output, 0);
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "algorithm,binary_accuracy_pct,multiclass_accuracy_pct");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("cnn,"));
    assert!(lines[2].starts_with("decision_tree,"));
    assert!(lines[3].starts_with("rsl_knn,"));
}

#[test]
fn simulate_normal_scenario_stays_safe() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let output = run(&["simulate", "--config", config.to_str().unwrap(), "--scenario",
        "normal", "--out", out.to_str().unwrap()]);
    assert_code(&output, 0);
    for name in [
        "trace.jsonl",
        "ledger.jsonl",
        "scenario_report.json",
        "ledger_rules.jsonl",
        "switch_dumps.jsonl",
        "alerts.jsonl",
    ] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("scenario_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdicts"]["safe"], 1);
    assert_eq!(report["packets_dropped"], 0);
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&["simulate", "--config", config.to_str().unwrap(), "--scenario",
            "rule-modification", "--out", out.to_str().unwrap()]);
        assert_code(&output, 0);
    }
    for name in ["trace.jsonl", "ledger.jsonl", "scenario_report.json", "alerts.jsonl"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn scenario_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = dir.path().join("out");
    let output = bin()
        .args(["simulate", "--config", config.to_str().unwrap(), "--out",
            out.to_str().unwrap()])
        .env("FLOWSENTRY_SCENARIO", "rule-injection")
        .output()
        .unwrap();
    assert_code(&output, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("scenario_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["verdicts"]["mitm_injection"], 1);
}

#[test]
fn unknown_scenario_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let output = run(&["simulate", "--config", config.to_str().unwrap(), "--scenario",
        "no-such-scenario", "--out", dir.path().join("out").to_str().unwrap()]);
    assert_code(&output, 2);
}

#[test]
fn failed_audit_expectation_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    // Tamper with a rule, then wrongly expect the audit to stay quiet.
    let script = r#"[
      {"tick": 1, "actor": "client", "action": "send_packet",
       "params": {"src": null, "dst": "server", "payload_class": "normal"}},
      {"tick": 2, "actor": "attacker", "action": "tamper_rule",
       "params": {"switch": "s1", "rule": {"position": 0}, "field": "out_port", "port": 1}},
      {"tick": 3, "actor": "dn", "action": "dn_audit", "params": {"expect": ["safe"]}}
    ]"#;
    let scenario = dir.path().join("wrong-expectation.json");
    fs::write(&scenario, script).unwrap();
    let output = run(&["simulate", "--config", config.to_str().unwrap(), "--scenario",
        scenario.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert_code(&output, 3);
    assert!(String::from_utf8_lossy(&output.stderr).contains("detection assertion failed"));
}
