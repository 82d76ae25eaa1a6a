use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geolaplace"));
    c.env("GEOLAPLACE_WORKERS", "2");
    c
}

fn write(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn cosh_config(extra: &str) -> String {
    format!(r#"{{"cost": {{"kind": "translation", "d": 1, "x_box": [[-1, 1]]}}{extra}}}"#)
}

#[test]
fn expand_cosh_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &cosh_config(""));
    let a = run(&["expand"], &cfg);
    assert!(a.status.success());
    let v = json(&a);
    assert!((v["I0"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["I1_total"].as_f64().unwrap() + 0.25).abs() < 1e-12);
    assert!(stdout(&a).contains("e+00"));
    let b = run(&["expand"], &cfg);
    assert_eq!(a.stdout, b.stdout);
    let o1 = run(&["oracle", "--eps", "0.1,0.05,0.02,0.01,0.005"], &cfg);
    let o2 = run(&["oracle", "--eps", "0.1,0.05,0.02,0.01,0.005"], &cfg);
    assert!(o1.status.success());
    assert_eq!(o1.stdout, o2.stdout);
}

#[test]
fn output_paths_are_written() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out.json");
    let cfg = write(&dir, "c.json", &cosh_config(&format!(r#", "output": {{"json": {}}}"#, serde_json::json!(out))));
    let o = run(&["expand"], &cfg);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["I1_boundary"].is_number());
}

#[test]
fn scan_reproduces_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", &cosh_config(""));
    let o = run(&["scan"], &cfg);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "eps,I_oracle,I0,I1_interior,I1_boundary,I1_total,residual");
    // fit (I − I0)/ε = a + bε over the rows
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 7);
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], (r[1] - r[2]) / r[0])).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let intercept = my - sxy / sxx * mx;
    assert!((intercept + 0.25).abs() < 0.0025, "intercept {intercept}");
    assert!(rows.iter().all(|r| r[5] == -0.25 || (r[5] + 0.25).abs() < 1e-12));
}

#[test]
fn geometry_reports() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", r#"{"cost": {"kind": "quadratic", "d": 1, "x_box": [[-1, 1]]}}"#);
    let o = bin().args(["geometry", "--x", "0"]).arg("--config").arg(&q).output().unwrap();
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["g"], serde_json::json!([1.0]));
    assert_eq!(v["Rt_scalar"].as_f64().unwrap(), 0.0);
    assert_eq!(v["R_scalar"].as_f64().unwrap(), 0.0);

    let b = write(&dir, "b.json", r#"{"cost": {"kind": "bayes", "d": 1, "x_box": [[-1, 1]]}}"#);
    let v = json(&bin().args(["geometry", "--x", "0.3"]).arg("--config").arg(&b).output().unwrap());
    assert!(v["R_scalar"].as_f64().unwrap().abs() < 1e-12 && v["Rt_scalar"].as_f64().unwrap().abs() < 1e-12);

    let l = write(&dir, "l.json", r#"{"cost": {"kind": "log_divergence", "params": {"alpha": 1}, "d": 2, "x_box": [[0.5, 1.5], [0.5, 1.5]]}}"#);
    let rt: Vec<f64> = ["0.7,1.2", "1.3,0.6"]
        .iter()
        .map(|x| {
            let o = bin().args(["geometry", "--x", x]).arg("--config").arg(&l).output().unwrap();
            assert!(o.status.success());
            json(&o)["Rt_scalar"].as_f64().unwrap()
        })
        .collect();
    assert!((rt[0] - rt[1]).abs() < 1e-8 * rt[0].abs());
}

#[test]
fn verify_all_builtins_passes() {
    let o = bin().args(["verify", "--all-builtins", "--d", "1"]).output().unwrap();
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(o.status.success(), "{err}");
    assert!(!err.contains("FAIL"));
    let v = json(&o);
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"cost": {"kind": "quadratic", "d": 1, "#);
    let o = run(&["expand"], &bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));

    let unknown = write(&dir, "u.json", r#"{"cost": {"kind": "quadratic", "d": 1, "x_box": [[-1, 1]]}, "colour": 3}"#);
    assert_eq!(run(&["expand"], &unknown).status.code(), Some(2));

    let parse = write(&dir, "p.json", &cosh_config(r#", "density": {"rho": "x3 + 1"}"#));
    assert_eq!(run(&["expand"], &parse).status.code(), Some(2));

    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("expand").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn numeric_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    // U'' vanishes on the diagonal
    let flat = write(&dir, "f.json", r#"{"cost": {"kind": "translation", "params": {"U": "x1^4"}, "d": 1, "x_box": [[-1, 1]]}}"#);
    let o = run(&["expand"], &flat);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", r#"{"cost": {"kind": "bregman", "d": 2, "x_box": [[-1, 1], [-1, 1]]}, "density": {"rho": "exp(0.3*x1 - 0.2*y2)"}}"#);
    let a = bin().env("GEOLAPLACE_WORKERS", "1").args(["expand", "--nodes", "12"]).arg("--config").arg(&cfg).output().unwrap();
    let b = bin().env("GEOLAPLACE_WORKERS", "4").args(["expand", "--nodes", "12"]).arg("--config").arg(&cfg).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let bad = bin().env("GEOLAPLACE_WORKERS", "zero").args(["expand"]).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
