use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmc")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn relax_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let edge = write(dir.path(), "edge.txt", "0 1 1.0\n");
    let v = json(&qmc(&["relax", edge.to_str().unwrap(), "--level", "2"]));
    let nu = v["relaxation"]["objective"].as_f64().unwrap();
    assert!((nu - 1.0).abs() < 1e-5, "{nu}");
}

#[test]
fn threshold_rounding_on_single_edge_has_ratio_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let edge = write(dir.path(), "edge.txt", "0 1 1.0\n");
    let v = json(&qmc(&["round", edge.to_str().unwrap(), "--algo", "threshold"]));
    let r = &v["rounding"];
    assert_eq!(r["realized_total"].as_f64().unwrap(), 0.5);
    assert!((r["realized_ratio"].as_f64().unwrap() - 0.5).abs() < 1e-5);
}

#[test]
fn alpha_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("alpha.csv");
    let out = dir.path().join("alpha.json");
    let status = qmc(&["analyze", "--curve", "alpha", "--d-max", "10", "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let points = v["analysis"]["curve"]["points"].as_array().unwrap();
    assert!(points[2][1].as_f64().unwrap() > 0.557);
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "c5.txt", "0 1 1\n1 2 0.5\n2 3 1\n3 4 0.7\n0 4 1\n");
    let args = ["round", g.to_str().unwrap(), "--algo", "product", "--seed", "7", "--samples", "50"];
    let a = qmc(&args);
    let b = qmc(&args);
    assert_eq!(without_timings(json(&a)), without_timings(json(&b)));
    let strip = |o: &Output| {
        let text = String::from_utf8(o.stdout.clone()).unwrap();
        text.lines().filter(|l| !l.contains("total_seconds")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    let c = json(&qmc(&["round", g.to_str().unwrap(), "--algo", "product", "--seed", "8", "--samples", "50"]));
    assert_ne!(without_timings(json(&a))["rounding"], without_timings(c)["rounding"]);
}

#[test]
fn oracle_and_certify() {
    let dir = tempfile::tempdir().unwrap();
    let tri = write(dir.path(), "tri.txt", "0 1 1\n1 2 1\n0 2 1\n");
    let v = json(&qmc(&["oracle", tri.to_str().unwrap(), "--lmax"]));
    assert!((v["oracle"]["lambda_max"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    let v = json(&qmc(&["certify", tri.to_str().unwrap()]));
    assert_eq!(v["audits"]["passed"], Value::Bool(true));
    let v = json(&qmc(&["certify", "--dual"]));
    assert_eq!(v["audits"]["dual"]["passed"], Value::Bool(true));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "0 1 1\n0 0 1.0\n");
    let out = qmc(&["relax", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(qmc(&["relax", "--no-such-flag"]).status.code(), Some(1));
    // Threshold rounding needs QMC terms.
    let generic = write(
        dir.path(),
        "pos.json",
        r#"{"n": 2, "kind": "positive", "edges": [{"i": 0, "j": 1, "w": 1.0, "c_id": 0.25, "c": [-0.25, 0, 0, 0, -0.125, 0, 0, 0, -0.125]}]}"#,
    );
    assert_eq!(qmc(&["round", generic.to_str().unwrap(), "--algo", "threshold"]).status.code(), Some(1));
    assert!(qmc(&["round", generic.to_str().unwrap(), "--algo", "generic"]).status.success());
    // A threshold outside the checked range fails its audit.
    assert_eq!(qmc(&["analyze", "--check-gamma", "--gamma", "0.99"]).status.code(), Some(2));
}
