//! Binary-level behavior: exit codes, output files, error manifests.

use std::path::Path;
use std::process::{Command, Output};

use reachcert::experiments::ExperimentConfig;

fn reachcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reachcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_linear_config(dir: &Path) -> String {
    let mut config = ExperimentConfig::for_model("linear2d").unwrap();
    config.total_samples = 40;
    config.splits = vec![(20, 20)];
    config.tube.instants = 5;
    config.seed = 3;
    config.out_dir = dir.join("out");
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_json().unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_writes_csv_manifest_and_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_linear_config(dir.path());
    let out = reachcert(&["--config", &config, "sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out_dir = dir.path().join("out");
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("N,M,vol,k_hat,e_hat,epsilon,runtime_s,seed\n"));
    assert_eq!(csv.lines().count(), 2);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["seed"], 3);
    assert!(manifest["rng"].as_str().unwrap().contains("chacha8"));

    let estimates: Vec<_> = std::fs::read_dir(out_dir.join("estimates"))
        .unwrap()
        .collect();
    assert_eq!(estimates.len(), 1);
}

#[test]
fn sweep_dump_scenarios_writes_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_linear_config(dir.path());
    let out = reachcert(&["--config", &config, "sweep", "--dump-scenarios"]);
    assert!(out.status.success());
    let base = dir.path().join("out").join("scenarios");
    for name in [
        "split0_train.csv",
        "split0_train.meta.json",
        "split0_holdout.csv",
        "split0_holdout.meta.json",
    ] {
        assert!(base.join(name).exists(), "{name} missing");
    }
}

#[test]
fn invalid_config_exits_nonzero_with_error_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::for_model("linear2d").unwrap();
    config.splits = vec![(40, 0)];
    config.total_samples = 40;
    let path = dir.path().join("bad.json");
    // Serialize without validation.
    std::fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();

    let out_dir = dir.path().join("out");
    let out = reachcert(&[
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "sweep",
    ]);
    assert!(!out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("error_manifest.json")).unwrap(),
    )
    .unwrap();
    assert!(manifest["error"].as_str().unwrap().contains("config"));
}

#[test]
fn unknown_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = reachcert(&[
        "--out-dir",
        dir.path().to_str().unwrap(),
        "sweep",
        "--model",
        "pendulum",
    ]);
    assert!(!out.status.success());
    assert!(dir.path().join("error_manifest.json").exists());
}

#[test]
fn inspect_reports_estimate_and_membership() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_linear_config(dir.path());
    assert!(reachcert(&["--config", &config, "sweep"]).status.success());

    let estimates_dir = dir.path().join("out").join("estimates");
    let estimate = std::fs::read_dir(&estimates_dir)
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();

    let out = reachcert(&[
        "inspect",
        estimate.to_str().unwrap(),
        "--point",
        "0.0,0.0",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rbf estimate: model=linear2d"));
    assert!(stdout.contains("contains="));

    // Manifests are recognized too.
    let manifest = dir.path().join("out").join("manifest.json");
    let out = reachcert(&["inspect", manifest.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("run manifest: command=sweep"));
}

#[test]
fn wnj_small_run_reports_support_count() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = reachcert(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "5",
        "wnj",
        "--model",
        "linear2d",
        "--total",
        "30",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("wnj.csv")).unwrap();
    assert!(csv.starts_with("N,support_count,vol,epsilon,runtime_s,seed\n"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("support="));
}

#[test]
fn tube_outputs_instants_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_linear_config(dir.path());
    let out = reachcert(&["--config", &config, "tube"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    let instants = std::fs::read_to_string(out_dir.join("tube_instants.csv")).unwrap();
    assert!(instants.starts_with("tau,violations\n"));
    assert_eq!(instants.lines().count(), 6);

    let out = reachcert(&[
        "inspect",
        out_dir.join("tube_estimate.json").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("tube estimate: instants=5"));
}
