use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const S2_T1: &str = r#"{"blocks":[{"kind":"sphere","radius":1},
    {"kind":"complex_torus","area":1,"modulus":[0,1],"bundle_degree":1,"novikov_c":[0,0]}]}"#;
const S2: &str = r#"{"blocks":[{"kind":"sphere","radius":1}]}"#;

fn heatlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatlab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spectrum_writes_graded_csv() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "s2.json", S2);
    let out = dir.path().join("spec.csv");
    let o = heatlab(&["spectrum", "--geometry", s(&g), "--complex", "derham", "--degree", "0,1", "--cutoff", "30", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("grading,eigenvalue,multiplicity"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // l(l+1) ≤ 30 for l = 0..5; grading 1 doubles l ≥ 1
    assert_eq!(rows.iter().filter(|r| r[0] == "0").count(), 6);
    assert_eq!(rows.iter().filter(|r| r[0] == "1").count(), 5);
    assert_eq!(rows[1][2], "3");
}

#[test]
fn trace_writes_one_row_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "s2.json", S2);
    let o = heatlab(&["trace", "--geometry", s(&g), "--complex", "derham", "--t-ladder", "0.5:0.5:4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,value,error_bound");
    assert_eq!(lines.len(), 5);
    for row in &lines[1..] {
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 2.0).abs() < 1e-20);
    }
}

#[test]
fn coeffs_reports_requested_orders() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "s2.json", S2);
    let out = dir.path().join("fit.json");
    let o = heatlab(&["coeffs", "--geometry", s(&g), "--complex", "dolbeault", "--aggregate", "derived", "--orders", "2", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for key in ["coefficients", "uncertainty", "condition", "residual_norm", "ladder"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["coefficients"].as_object().unwrap().len(), 1);
    assert!(v["uncertainty"]["2"].as_f64().unwrap() < 1e-7);
    let a: f64 = v["coefficients"]["2"].as_str().unwrap().parse().unwrap();
    assert!((a - 2.0 / 3.0).abs() < 1e-6, "{a}");
}

#[test]
fn predict_derived_top_of_sphere_times_torus() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "st.json", S2_T1);
    let o = heatlab(&["predict", "--geometry", s(&g), "--identity", "derived-top"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"], "7/6");
    assert_eq!(v["paths_agree"], true);
    assert_eq!(heatlab(&["predict", "--geometry", s(&g), "--identity", "genus"]).status.code(), Some(2));
}

#[test]
fn verify_exit_codes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    let o = heatlab(&["verify", "--suite", "L26-SPHERE", "--out", s(&out), "--csv", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["summary"]["failed"], 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 2);

    assert_eq!(heatlab(&["verify", "--suite", "NOT-A-CHECK"]).status.code(), Some(2));
}

#[test]
fn verify_fails_on_a_tolerance_miss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"tolerances":{"exact":1e-40}}"#);
    let g = write(dir.path(), "s2.json", S2);
    let o = heatlab(&["verify", "--config", s(&cfg), "--suite", "MS-CONST", "--geometry", s(&g)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "bad.json", r#"{"blocks":[{"kind":"sphere","radius":0}]}"#);
    assert_eq!(heatlab(&["predict", "--geometry", s(&g), "--identity", "euler"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(heatlab(&["predict", "--geometry", s(&missing), "--identity", "euler"]).status.code(), Some(2));
}
