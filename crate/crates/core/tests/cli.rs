use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn polylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polylab")).args(args).output().expect("spawn polylab")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/r6_demo.toml")
}

#[test]
fn classify_prints_region_and_exponent() {
    let out = polylab(&["classify", "--alpha", "2", "--gamma", "0", "--zeta", "inf"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["region"], "R2");
    assert!((v["xi"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let v = stdout_json(&polylab(&["classify", "--alpha", "1.5", "--gamma", "0", "--zeta", "0"]));
    assert_eq!(v["region"], "R5");
    assert!((v["xi"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn classify_rejects_alpha_one() {
    let out = polylab(&["classify", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha=1 excluded"));
}

#[test]
fn oracle_examples_and_guard() {
    let out = polylab(&["oracle", "--n", "1", "--beta-hat", "0", "--h-hat", "1", "--zeta", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["engine"].as_f64().unwrap() + 2.0).abs() < 1e-15);
    assert!((v["oracle"].as_f64().unwrap() + 2.0).abs() < 1e-15);

    let v = stdout_json(&polylab(&["oracle", "--n", "12", "--seed", "7", "--alpha", "1.5", "--h-hat", "0.3"]));
    assert!(v["rel_diff"].as_f64().unwrap() <= 1e-12);

    assert_eq!(polylab(&["oracle", "--n", "20"]).status.code(), Some(2));
}

#[test]
fn sweep_demo_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = demo_config();
    let cfg = cfg.to_str().unwrap();
    let out = polylab(&["sweep", cfg, "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "pass");
    assert!((summary["limit"].as_f64().unwrap() + 2.0).abs() < 1e-12);

    let out = polylab(&["--threads", "1", "sweep", cfg, "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv_a = std::fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("sweep.csv")).unwrap());
    assert!(csv_a.starts_with(b"# polylab-version "));
}

#[test]
fn sweep_rejects_empty_n_list() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo_config()).unwrap().replace("N_list = [250, 500, 1000, 2000]", "N_list = []");
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = polylab(&["sweep", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_rejects_unknown_suite() {
    assert_eq!(polylab(&["validate", "nonsense"]).status.code(), Some(2));
}

#[test]
fn validate_oracle_suite_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = polylab(&["validate", "oracle", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate_oracle.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}
