use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circleqm")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Rows of a `phi,p,value` file.
fn parse_csv(text: &str) -> Vec<[f64; 3]> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("phi,p,value"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn overlap_examples() {
    let out = run(&["overlap", "--delta", "0", "--s", "1", "--zI", "0,0", "--zF", "0,0"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((num(&v["overlap"][0]) - 1.772637).abs() < 1e-6);
    assert!((num(&v["normalized_abs"]) - 1.0).abs() < 1e-15);

    let out = run(&["overlap", "--delta", "0", "--s", "0.5", "--zI", "0,0", "--zF", "pi,0"]);
    let v = json(&out);
    // direct sums over n
    let s2: f64 = 0.25;
    let (mut ov, mut norm) = (0.0, 0.0);
    for n in -40i32..=40 {
        let x = n as f64;
        let g = (-x * x * s2).exp();
        ov += g * (PI * x).cos();
        norm += g;
    }
    assert!((num(&v["normalized_abs"]) - (ov / norm).abs()).abs() < 1e-15);
    assert!((num(&v["normalized_abs"]) - 2.0 * (-PI * PI).exp()).abs() < 1e-12);
}

#[test]
fn expect_reports_saturated_uncertainty() {
    let v = json(&run(&["expect", "--s", "0.7", "--delta", "0.2", "--z", "0.3,-0.4"]));
    let (a, b) = (num(&v["uncertainty_product"]), num(&v["uncertainty_bound"]));
    assert!((a - b).abs() < 1e-10 * b);
    assert!(num(&v["exp_iphi"][0]).is_finite());
}

#[test]
fn husimi_basis_state_has_flat_angle_marginal_and_unit_mass() {
    let args = [
        "husimi",
        "--s",
        "1",
        "--basis",
        "0",
        "--phi-count",
        "16",
        "--p-min",
        "-6",
        "--p-max",
        "6",
        "--p-count",
        "401",
    ];
    let out = run(&args);
    assert!(out.status.success());
    let rows = parse_csv(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 16 * 401);
    let h = 12.0 / 400.0;
    let marginal = |j: usize| -> f64 {
        let r = &rows[j * 401..(j + 1) * 401];
        r.iter().enumerate().map(|(i, x)| if i == 0 || i == 400 { 0.5 * h * x[2] } else { h * x[2] }).sum()
    };
    let first = marginal(0);
    for j in 1..16 {
        assert!((marginal(j) - first).abs() < 1e-14 * first);
    }
    let mass: f64 = (0..16).map(marginal).sum::<f64>() / 16.0;
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    assert_eq!(run(&args).stdout, out.stdout);
}

#[test]
fn husimi_coherent_peak_sits_at_its_angle() {
    let out = run(&[
        "husimi",
        "--s",
        "0.5",
        "--z",
        "pi/2,0.5",
        "--phi-count",
        "64",
        "--p-min",
        "-2",
        "--p-max",
        "3",
        "--p-count",
        "101",
    ]);
    let rows = parse_csv(std::str::from_utf8(&out.stdout).unwrap());
    let best = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert!((best[0] - PI / 2.0).abs() <= PI / 32.0, "peak at {best:?}");
}

#[test]
fn two_term_zero_and_reconstruction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "two.json",
        r#"{"representation": {"delta": 0, "s": 0.5}, "state": {"kind": "vector", "n_min": 0, "coeffs": [[1, 0], [1, 0]]}}"#,
    );
    let v = json(&run(&["zeros", "--config", &cfg]));
    assert_eq!(v["m"], 0);
    assert_eq!(v["zeros"].as_array().unwrap().len(), 1);
    assert!((num(&v["zeros"][0][0]) - PI).abs() < 1e-12);
    assert!((num(&v["zeros"][0][1]) - 0.125).abs() < 1e-12);
    assert_eq!(v["l"], 0);

    let v = json(&run(&["reconstruct", "--config", &cfg]));
    assert!(num(&v["max_rel_error"]) <= 1e-6);
    assert_eq!(v["points"], 100);
}

#[test]
fn short_time_propagator_matches_overlap() {
    let common = ["--delta", "0", "--s", "0.5", "--zI", "0,0", "--zF", "0.5,0"];
    let k = json(&run(&[&["propagate", "--tau", "1e-3"][..], &common].concat()));
    let o = json(&run(&[&["overlap"][..], &common].concat()));
    let (kr, ki) = (num(&k["value"][0]), num(&k["value"][1]));
    let or = num(&o["overlap"][0]);
    let rel = ((kr - or).powi(2) + ki.powi(2)).sqrt() / or.abs();
    assert!(rel <= 1e-3, "relative error {rel}");
}

#[test]
fn propagate_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("branches.csv");
    let out = run(&[
        "propagate",
        "--s",
        "0.3",
        "--delta",
        "0.3",
        "--zI",
        "0.2,0.1",
        "--zF",
        "0.5,-0.2",
        "--tau",
        "0.5",
        "--k-pend",
        "0.1",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,nu,re_contrib,im_contrib,re_S,im_S,prefactor_abs,prefactor_arg"));
    let (mut re, mut im) = (0.0, 0.0);
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 8);
        re += f[2].parse::<f64>().unwrap();
        im += f[3].parse::<f64>().unwrap();
    }
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("branches.summary.json")).unwrap()).unwrap();
    assert!((num(&summary["value"][0]) - re).abs() <= 1e-12 * re.abs().max(1.0));
    assert!((num(&summary["value"][1]) - im).abs() <= 1e-12 * re.abs().max(1.0));
    assert!(summary["truncation_report"]["included"].as_array().unwrap().contains(&Value::from(0)));
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let bad_key = write(dir.path(), "bad.json", r#"{"representation": {"delta": 0, "s": 1}, "colour": 3}"#);
    let malformed = write(dir.path(), "malformed.json", r#"{"representation": {"delta": 0, "s": 1"#);
    for cfg in [&bad_key, &malformed] {
        let out = run(&["overlap", "--config", cfg, "--zI", "0,0", "--zF", "0,0", "--out", target.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2));
        assert!(!target.exists());
    }
    let out = run(&["overlap", "--delta", "1.5", "--s", "1", "--zI", "0,0", "--zF", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["overlap", "--s", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_3_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("zeros.json");
    let out = run(&["zeros", "--s", "1", "--z", "0,0", "--im-cutoff", "40", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "overflow");
    assert!(!target.exists());
}

#[test]
fn validate_passes_with_threads() {
    let out = run(&["validate", "--threads", "2", "--s", "0.4", "--delta", "0.3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 8);
}

#[test]
fn validate_reports_failed_checks_without_aborting() {
    // windings ±1 at τ = 1e−4 do not converge for s = 1
    let out = run(&["validate", "--s", "1", "--delta", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["pass"], false);
    let checks = v["checks"].as_array().unwrap();
    let short = checks.iter().find(|c| c["name"] == "short_time_propagator").unwrap();
    assert!(short["measured"].is_null() && short["error"].is_string());
    let ladder = checks.iter().find(|c| c["name"] == "ladder_eigenrelation").unwrap();
    assert_eq!(ladder["pass"], true);
}
