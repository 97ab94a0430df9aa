use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn heterotic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heterotic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("heterotic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn check<'a>(report: &'a Value, id: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["id"] == id)
        .unwrap_or_else(|| panic!("no check `{id}`"))
}

fn table(path: &PathBuf) -> Vec<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["x", "u", "f", "e2f", "residual"]);
    rdr.records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn every_catalogue_scenario_passes() {
    for name in [
        "thm-7d-negative",
        "thm-7d-positive",
        "ball-7d",
        "thm-5d-negative",
        "thm-5d-positive",
        "contraction-6d",
        "contraction-5d",
    ] {
        let out = heterotic(&["verify", "--scenario", name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        assert_eq!(r["scenario"], name);
        assert_eq!(r["all_pass"], true);
    }
}

#[test]
fn ode_residual_within_tolerance() {
    let r = json(&heterotic(&["verify", "--scenario", "thm-7d-negative"]));
    let ode = check(&r, "ode");
    assert!(ode["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(check(&r, "instanton")["residual"], 0.0);
}

#[test]
fn rank_two_lambda_fails_the_instanton_check() {
    let out = heterotic(&["verify", "--scenario", "thm-7d-negative", "--set", "rank2-lambda"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(check(&json(&out), "instanton")["pass"], false);
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(heterotic(&["verify", "--scenario", "no-such-scenario"]).status.code(), Some(2));
    assert_eq!(heterotic(&["verify"]).status.code(), Some(2));
    assert_eq!(
        heterotic(&["verify", "--scenario", "thm-5d-negative", "--set", "rank2-lambda"]).status.code(),
        Some(2)
    );
    let bad = tmp("bad.csv");
    let bad = bad.to_str().unwrap();
    for args in [
        &["dump-profile", "--profile", "ball", "--params", "a_sq=-1", "--out", bad][..],
        &["dump-profile", "--profile", "weierstrass", "--out", bad],
        &["dump-profile", "--profile", "torus", "--params", "d=1", "--out", bad],
        &["crosscheck", "--profile", "ball", "--params", "a_sq=1", "--expr", "nope"],
        &["crosscheck", "--profile", "ball", "--params", "a_sq=x", "--expr", "e2f"],
        &["crosscheck", "--profile", "ball", "--params", "a_sq=1", "--expr", "e2f", "--step", "0"],
    ] {
        assert_eq!(heterotic(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn reports_are_byte_identical() {
    let a = tmp("a.json");
    let b = tmp("b.json");
    for p in [&a, &b] {
        let out = heterotic(&["verify", "--scenario", "thm-5d-negative", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_round_trip() {
    let cfg = tmp("spec.json");
    std::fs::write(&cfg, r#"{"scenario": "ball-7d", "seed": 3}"#).unwrap();
    let r = json(&heterotic(&["verify", "--config", cfg.to_str().unwrap()]));
    assert_eq!(r["scenario"], "ball-7d");
    assert_eq!(r["seed"], 3);
}

#[test]
fn weierstrass_profile_dips_to_d_at_the_half_period() {
    let out = tmp("w.csv");
    let status = heterotic(&["dump-profile", "--profile", "weierstrass", "--params", "d=1", "--grid", "101", "--out", out.to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(0));
    let rows = table(&out);
    let u: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let (at, min) = u.iter().enumerate().fold((0, f64::INFINITY), |m, (i, &v)| if v < m.1 { (i, v) } else { m });
    assert_eq!(at, 50);
    assert!((min - 1.0).abs() < 1e-9, "min u = {min}");
    assert!(u[..=at].windows(2).all(|w| w[0] > w[1]));
    assert!(u[at..].windows(2).all(|w| w[0] < w[1]));
    assert!(rows.iter().all(|r| r[4].abs() < 1e-8));
}

#[test]
fn ball_and_fundamental_profiles() {
    let out = tmp("b.csv");
    heterotic(&["dump-profile", "--profile", "ball", "--params", "a_sq=1", "--grid", "9", "--out", out.to_str().unwrap()]);
    let rows = table(&out);
    let peak = rows[4][3];
    for r in &rows {
        assert!((r[1] - (1.0 - r[0] * r[0])).abs() < 1e-12);
        assert!((r[3] - peak * r[1]).abs() < 1e-12);
    }

    let out = tmp("f.csv");
    heterotic(&["dump-profile", "--profile", "fundamental", "--params", "c=2", "--grid", "9", "--out", out.to_str().unwrap()]);
    let rows = table(&out);
    let k = rows[0][3] * rows[0][0] * rows[0][0];
    for r in &rows {
        assert!((r[3] * r[0] * r[0] - k).abs() < 1e-9 * k, "e2f r^2 not constant at {}", r[0]);
    }
}

fn crosscheck(profile: &str, params: &str, expr: &str, extra: &[&str]) -> (Option<i32>, Value) {
    let mut args = vec!["crosscheck", "--profile", profile, "--params", params, "--expr", expr];
    args.extend_from_slice(extra);
    let out = heterotic(&args);
    (out.status.code(), json(&out))
}

#[test]
fn crosscheck_agrees_with_finite_differences() {
    let (code, r) = crosscheck("ball", "a_sq=1", "e2f", &[]);
    assert_eq!(code, Some(0));
    assert!(r["max_rel_error"].as_f64().unwrap() <= 1e-8);
    for expr in ["grad-sq", "laplacian-e2f", "dT"] {
        assert_eq!(crosscheck("ball", "a_sq=1", expr, &[]).0, Some(0), "{expr}");
    }
    assert_eq!(crosscheck("weierstrass", "d=1", "dT", &[]).0, Some(0));
    assert_eq!(crosscheck("fundamental", "c=1", "laplacian-e2f", &["--seed", "5"]).0, Some(0));
}

#[test]
fn crosscheck_detects_a_perturbed_jet() {
    for expr in ["e2f", "dT"] {
        let (code, r) = crosscheck("ball", "a_sq=1", expr, &["--perturb"]);
        assert_eq!(code, Some(1), "{expr}");
        assert_eq!(r["perturbed"], true);
        assert!(r["max_rel_error"].as_f64().unwrap() > 1e-6);
    }
}
