use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn concalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_concalc")).args(args).output().expect("spawn concalc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn suite_pass_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let out = concalc(&[
        "vn",
        "--cases",
        "7",
        "--dims",
        "1..3",
        "--out",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["suite"], "vn");
    assert_eq!(report["pass"], true);
    let cases = report["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 7);
    assert!(cases.iter().all(|c| (1..=3).contains(&c["dim"].as_u64().unwrap())));

    let rows = fs::read_to_string(&csv).unwrap();
    let mut lines = rows.lines();
    assert_eq!(lines.next(), Some("case_id,dim,degree,residual,tolerance,pass"));
    assert_eq!(lines.count(), 7);
}

#[test]
fn zero_tolerance_fails_with_exit_one() {
    let out = concalc(&["dilation", "--cases", "4", "--dims", "3..4", "--tol", "dilation=0"]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&concalc(&["bogus"])), 2);
    assert_eq!(code(&concalc(&[])), 2);
    assert_eq!(code(&concalc(&["vn", "--dims", "5..2"])), 2);
    assert_eq!(code(&concalc(&["vn", "--cases", "0"])), 2);
    assert_eq!(code(&concalc(&["vn", "--tol", "nosuch=1e-3"])), 2);
    assert_eq!(code(&concalc(&["vn", "--tol", "vn"])), 2);
    assert_eq!(code(&concalc(&["eval", "--phi", "/nonexistent.json", "--t", "/nonexistent.json"])), 2);
}

#[test]
fn same_seed_same_report() {
    let strip = |out: Output| {
        let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["wall_time_ms"] = Value::from(0);
        v
    };
    let a = strip(concalc(&["doi-dual", "--cases", "6", "--seed", "9"]));
    let b = strip(concalc(&["doi-dual", "--cases", "6", "--seed", "9"]));
    let c = strip(concalc(&["doi-dual", "--cases", "6", "--seed", "10"]));
    assert_eq!(a, b);
    assert_ne!(a["cases"], c["cases"]);
}

#[test]
fn eval_squares_a_triangular_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    let t = dir.path().join("t.json");
    fs::write(&phi, r#"{"coeffs": [[0,0],[0,0],[1,0]]}"#).unwrap();
    fs::write(&t, r#"{"rows":2,"cols":2,"data":[[0.5,0],[0.1,0],[0,0],[0.3,0]]}"#).unwrap();
    let out = concalc(&["eval", "--phi", phi.to_str().unwrap(), "--t", t.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let m: Value = serde_json::from_slice(&out.stdout).unwrap();
    let got: Vec<f64> = m["data"].as_array().unwrap().iter().map(|e| e[0].as_f64().unwrap()).collect();
    for (g, w) in got.iter().zip([0.25, 0.08, 0.0, 0.09]) {
        assert!((g - w).abs() < 1e-15);
    }
}

#[test]
fn eval_rejects_non_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    let t = dir.path().join("t.json");
    fs::write(&phi, r#"{"coeffs": [[1,0]]}"#).unwrap();
    fs::write(&t, r#"{"rows":1,"cols":1,"data":[[2,0]]}"#).unwrap();
    let out = concalc(&["eval", "--phi", phi.to_str().unwrap(), "--t", t.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn besov_norm_of_monomials() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    for m in [1usize, 5, 17] {
        let mut coeffs = vec!["[0,0]"; m + 1];
        coeffs[m] = "[1,0]";
        fs::write(&phi, format!(r#"{{"min_k": 0, "coeffs": [{}]}}"#, coeffs.join(","))).unwrap();
        let out = concalc(&["besov-norm", "--phi", phi.to_str().unwrap(), "--s", "1", "--p", "inf", "--q", "1"]);
        assert_eq!(code(&out), 0);
        let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
        assert!((v - m as f64).abs() < 1e-9, "m={m}: {v}");
    }
    let out = concalc(&["besov-norm", "--phi", phi.to_str().unwrap(), "--p", "0.5"]);
    assert_eq!(code(&out), 2);
}
