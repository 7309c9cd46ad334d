use serde_json::Value;
use std::process::{Command, Output};

fn qflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qflab"))
        .args(args)
        .env_remove("QFLAB_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn pair(s: &str) -> [f64; 2] {
    let v: Vec<f64> = s.trim().split(',').map(|x| x.parse().unwrap()).collect();
    [v[0], v[1]]
}

#[test]
fn complex_product() {
    let o = qflab(&["mul", "--family", "complex", "--lhs", "0,1", "--rhs", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "-1,0");
}

#[test]
fn left_division_by_identity() {
    let o = qflab(&["ldiv", "--family", "P11a", "--w", "2", "--lhs", "1,0", "--rhs", "0.3,-1.7"]);
    assert_eq!(o.status.code(), Some(0));
    let x = pair(&stdout(&o));
    assert!((x[0] - 0.3).abs() < 1e-10 && (x[1] + 1.7).abs() < 1e-10, "{x:?}");
}

#[test]
fn right_division_round_trip() {
    let (w, q) = ("0.4,1.3", "-0.8,0.5");
    let o = qflab(&["rdiv", "--family", "P16a", "--lhs", w, "--rhs", q]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let x = text.lines().next().unwrap();
    let o = qflab(&["mul", "--family", "P16a", "--lhs", x, "--rhs", q]);
    let back = pair(&stdout(&o));
    let want = pair(w);
    assert!((back[0] - want[0]).abs() < 1e-8 && (back[1] - want[1]).abs() < 1e-8, "{back:?}");
    assert!(text.lines().nth(1).unwrap().starts_with("residual"));
}

#[test]
fn family_list_and_show() {
    let o = qflab(&["family", "list"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 14);
    let o = qflab(&["family", "show", "P16b"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("4d^2 >= 1"));
}

#[test]
fn classify_verdicts() {
    let o = qflab(&["classify", "--family", "P11a", "--w", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["status"], "match");
    assert_eq!(v["verdicts"]["decomposable"], true);

    let o = qflab(&["classify", "--family", "P12b", "--gamma", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdicts"]["quasi_simple"], true);
}

#[test]
fn classify_exported_complex_spread() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("complex.json");
    let p = path.to_str().unwrap();
    let o = qflab(&["family", "export", "complex", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = qflab(&["classify", "--spread", p]);
    assert_ne!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["verdicts"]["proper"], false);
}

#[test]
fn spread_export_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p11c.json");
    let p = path.to_str().unwrap();
    assert_eq!(qflab(&["family", "export", "P11c", "--out", p]).status.code(), Some(0));
    let o = qflab(&["verify", "spread", "--spread", p]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["m1_violations"], 0);

    let o = qflab(&["family", "export", "P11a", "--w", "2"]);
    let sample: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(sample.is_object());
}

#[test]
fn section_sharply_transitive() {
    let o = qflab(&["verify", "section", "--family", "complex", "--samples", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert!(v["max_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn c1_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let n = 257;
    let t: Vec<f64> = (0..n).map(|i| std::f64::consts::TAU * i as f64 / (n - 1) as f64).collect();
    let write = |name: &str, b: Vec<f64>| {
        let path = dir.path().join(name);
        let prof = serde_json::json!({ "t": t, "a": vec![1.0; n], "b": b });
        std::fs::write(&path, prof.to_string()).unwrap();
        path
    };
    let flat = write("flat.json", vec![0.0; n]);
    let o = qflab(&["verify", "c1", "--profile", flat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "pass");

    let edge = write("edge.json", t.iter().map(|x| -x).collect());
    let o = qflab(&["verify", "c1", "--profile", edge.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdict"], "boundary");
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(qflab(&["classify", "--spread", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qflab(&["classify", "--family", "P99"]).status.code(), Some(2));
    assert_eq!(qflab(&["classify", "--family", "P11a", "--w", "-1"]).status.code(), Some(2));
    assert_eq!(qflab(&["mul", "--family", "complex", "--lhs", "1", "--rhs", "0,1"]).status.code(), Some(2));
}

#[test]
fn csv_translations() {
    let o = qflab(&["export-translations", "--family", "P16a", "--nr", "3", "--nt", "4", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("family,"));
    assert!(header.ends_with(",r,t,a,b,m11,m12,m21,m22"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn tolerance_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_qflab"))
        .args(["classify", "--family", "complex", "--nu", "5", "--nt", "16"])
        .env("QFLAB_TOL", "1e-7")
        .output()
        .unwrap();
    assert_eq!(json(&o)["grid"]["rtol"], 1e-7);
}
