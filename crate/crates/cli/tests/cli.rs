use std::path::PathBuf;
use std::process::{Command, Output};

fn chains(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chains")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chains-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_lagrangean_n1_passes() {
    let out = chains(&["verify", "--family", "lagrangean", "--n", "1", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert!(report["version"].is_string());
    assert_eq!(report["config"]["n"], 1);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() > 20);
    assert!(checks.iter().all(|c| c["status"] == "pass" && c["anchor"].is_string()));
    let sym = checks.iter().find(|c| c["anchor"].as_str().unwrap().starts_with("extension/psi-symmetrization")).unwrap();
    assert!(sym["constants"]["psi_symmetrization_constant"].is_string());
}

#[test]
fn verify_rejects_n0() {
    assert_eq!(chains(&["verify", "--family", "lagrangean", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn verify_cr_10_passes() {
    let out = chains(&["verify", "--family", "cr", "--p", "1", "--q", "0", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_is_deterministic() {
    let a = chains(&["verify", "--n", "1", "--samples", "5", "--seed", "9"]);
    let b = chains(&["verify", "--n", "1", "--samples", "5", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_tolerance_override_is_usage_error() {
    assert_eq!(chains(&["verify", "--tol", "nonsense=1e-3"]).status.code(), Some(2));
    assert_eq!(chains(&["verify", "--tol", "hausdorff"]).status.code(), Some(2));
    assert_eq!(chains(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn pure_direction_chain_csv() {
    let path = scratch("pure.csv");
    let out = chains(&["chain", "--n", "1", "--samples", "101", "--t-min", "-1", "--t-max", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,x3");
    assert_eq!(lines.len(), 102);
    let mid: Vec<f64> = lines[51].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(mid, vec![0.0; 4]);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path.with_extension("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["samples"], 101);
}

#[test]
fn chain_csv_is_deterministic() {
    let a = chains(&["chain", "--n", "2", "--direction", "1,0.5,0,0,-0.25", "--samples", "11"]);
    let b = chains(&["chain", "--n", "2", "--direction", "1,0.5,0,0,-0.25", "--samples", "11"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 12);
}

#[test]
fn contact_direction_fails() {
    let out = chains(&["chain", "--n", "1", "--direction", "0,1,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contact"));
}

#[test]
fn malformed_direction_is_usage_error() {
    assert_eq!(chains(&["chain", "--n", "1", "--direction", "1,0"]).status.code(), Some(2));
    assert_eq!(chains(&["chain", "--n", "1", "--direction", "1,x,0"]).status.code(), Some(2));
}

#[test]
fn tables_for_lagrangean_match() {
    let out = chains(&["tables", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tables"].as_array().unwrap().len(), 2);
    assert_eq!(v["tables"][0]["matches_reference"], true);
    assert_eq!(chains(&["tables", "--family", "cr"]).status.code(), Some(2));
}

#[test]
fn reconstruct_report_fields() {
    let out = chains(&["reconstruct", "--n", "2", "--samples", "4", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["n"], 2);
    assert_eq!(v["fiber_seed"], 3);
    for key in ["subspace_angles", "residuals", "iterations"] {
        assert_eq!(v[key].as_array().unwrap().len(), 4);
    }
    let out = chains(&["reconstruct", "--family", "cr", "--p", "1", "--q", "1", "--samples", "4"]);
    assert_eq!(out.status.code(), Some(0));
}
