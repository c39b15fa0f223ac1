use std::path::Path;
use std::process::Command;

use lakesim_cli::{parse_config, run_experiment, CliError, Experiment, RunConfig};

fn small(extra: &str) -> RunConfig {
    parse_config(&format!(r#"{{"numerics": {{"n": 32, "snapshots": 2}}, "physics": {{"T": 0.1{extra}}}}}"#))
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn minimal_config_takes_defaults() {
    let cfg = parse_config("{}").unwrap();
    assert_eq!(cfg.resolution(), 128);
    assert_eq!(cfg.numerics.dt, None);
    assert_eq!(cfg.physics.horizon, 1.0);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.domain.family, "disk");
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let err = parse_config("{\n  \"physics\": {\"viscocity\": 0.1}\n}").unwrap_err();
    match err {
        CliError::Parse { line, message, .. } => {
            assert_eq!(line, 2);
            assert!(message.contains("viscocity"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn viscous_runs_need_alpha_below_half() {
    let mut cfg = small("");
    cfg.domain.alpha = 0.6;
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(Experiment::RunViscous, &cfg, dir.path()).unwrap_err();
    assert!(matches!(&err, CliError::Validation(m) if m.contains("alpha must be < 0.5")), "{err}");
    assert!(run_experiment(Experiment::SolveElliptic, &cfg, dir.path()).is_ok());
}

#[test]
fn experiment_in_config_must_match() {
    let cfg = parse_config(r#"{"experiment": "sweep"}"#).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run_experiment(Experiment::GreenCheck, &cfg, dir.path()),
        Err(CliError::Validation(_))
    ));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = run_experiment(Experiment::SolveElliptic, &small(""), &blocker.join("out")).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn green_check_reports_both_deviations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(Experiment::GreenCheck, &small(""), dir.path()).unwrap();
    let pairs = &out.report["result"]["pairs"];
    assert_eq!(pairs["pairs"], 10_000);
    assert!(pairs["identity_max_deviation"].as_f64().unwrap() <= 1e-12);
    assert!(pairs["symmetry_max_deviation"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn manifest_reruns_bit_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(Experiment::RunViscous, &small(""), a.path()).unwrap();
    let cfg = parse_config(&read(a.path(), "manifest.json")).unwrap();
    run_experiment(Experiment::RunViscous, &cfg, b.path()).unwrap();
    for f in ["report.json", "energy.csv", "fields/psi_0002.bin"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn sweep_writes_per_mu_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(r#", "mu_list": [1e-2, 1e-3, 1e-4]"#);
    let out = run_experiment(Experiment::Sweep, &cfg, dir.path()).unwrap();
    for f in ["manifest.json", "report.json", "sweep.json", "sweep.csv", "errors/mu_02.csv", "audit/mu_00.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(out.report["result"]["sup_errors"].as_array().unwrap().len(), 3);
    assert!(read(dir.path(), "audit/mu_01.csv").starts_with("t,lhs,rhs,envelope,w_norm"));
}

#[test]
fn binary_exit_codes_and_failure_record() {
    let exe = env!("CARGO_BIN_EXE_lakesim");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"numerics": {"n": 32}}"#).unwrap();
    let out = dir.path().join("run");
    let ok = Command::new(exe)
        .args(["solve-elliptic", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["status"], "ok");

    std::fs::write(&cfg, r#"{"numerics": {"n": 32, "tol_solve": -1}}"#).unwrap();
    let bad = Command::new(exe)
        .args(["solve-elliptic", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(record["kind"], "validation");
}
