use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

fn fsbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsbc"))
        .args(args)
        .output()
        .expect("spawn fsbc")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_two_state_recovers_bsc_degradation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = fsbc(&[
        "analyze",
        "--spec",
        spec("two_state_bsbc.json").to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("defaults: lambdas=21 starts=32 trials=10000 N_max=12 n_max=3"));
    let a = read_json(&tmp.path().join("analysis.json"));
    assert_eq!(a["stochastic"]["verdict"], "feasible");
    assert!((a["stochastic"]["kernel"][0][1].as_f64().unwrap() - 0.0625).abs() < 1e-9);
    assert_eq!(a["physical"]["verdict"], "holds");
    assert_eq!(a["indecomposability"]["verdict"], "indecomposable");
    assert_eq!(a["tool"], "fsbc");
    assert!(a["version"].is_string() && a["config"]["command"] == "analyze");
}

#[test]
fn analyze_frozen_states_is_not_indecomposable() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = fsbc(&[
        "analyze",
        "--spec",
        spec("frozen_states.json").to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let a = read_json(&tmp.path().join("analysis.json"));
    assert_eq!(a["indecomposability"]["verdict"], "not-indecomposable");
}

#[test]
fn malformed_specs_exit_one_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"label": "x", "X": 2, "Y": 2, "Z": 2, "kernel": []}"#,
    )
    .unwrap();
    let o = fsbc(&["validate", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`S`"));

    fs::write(&bad, "{ nope").unwrap();
    let o = fsbc(&[
        "analyze",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));

    fs::write(
        &bad,
        r#"{"bsbc_family": {"state_chain": [[0.5, 0.6]], "eps1": [0.1], "eps12": [0.1]}}"#,
    )
    .unwrap();
    let o = fsbc(&["validate", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fsbc(&["bogus"]).status.code(), Some(1));
    assert_eq!(fsbc(&["region"]).status.code(), Some(1));
    let s = spec("memoryless_bsbc.json");
    let o = fsbc(&[
        "region",
        "--spec",
        s.to_str().unwrap(),
        "--lambdas",
        "0.5,0.2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fsbc(&["--help"]).status.code(), Some(0));
}

#[test]
fn oversized_message_sets_exit_two_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec("memoryless_bsbc.json");
    let o = fsbc(&[
        "simulate",
        "--spec",
        s.to_str().unwrap(),
        "--r1",
        "0.1",
        "--r2",
        "3",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Rx2"));
    assert!(!tmp.path().join("simulation.json").exists());
}

#[test]
fn blocklength_beyond_budget_exits_two() {
    let s = spec("two_state_bsbc.json");
    let o = fsbc(&["region", "--spec", s.to_str().unwrap(), "--n", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn region_memoryless_endpoints_and_files() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec("memoryless_bsbc.json");
    let o = fsbc(&[
        "region",
        "--spec",
        s.to_str().unwrap(),
        "--lambdas",
        "5",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("region.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,lambda,F_n,F_n_s0_0,R1,R2_boundary,R2_intersection"
    );
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((first[4]).abs() < 1e-12 && (first[5] - 0.39016).abs() < 1e-3);
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert!((last[4].parse::<f64>().unwrap() - 0.53100).abs() < 1e-3);
    assert_eq!(last[5].parse::<f64>().unwrap(), 0.0);
    let dat = fs::read_to_string(tmp.path().join("boundary.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 101);
    let meta = read_json(&tmp.path().join("region.meta.json"));
    assert_eq!(meta["u_card"], 2);
    assert_eq!(meta["boundary"]["concave"], true);
}

#[test]
fn single_lambda_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec("memoryless_bsbc.json");
    let o = fsbc(&[
        "region",
        "--spec",
        s.to_str().unwrap(),
        "--lambdas",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("warning: a single lambda"));
    let meta = read_json(&tmp.path().join("region.meta.json"));
    assert_eq!(meta["support"]["lambdas"].as_array().unwrap().len(), 1);
}

#[test]
fn noiseless_simulation_has_no_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let noiseless = tmp.path().join("noiseless.json");
    fs::write(
        &noiseless,
        r#"{"label": "noiseless", "X": 2, "Y": 2, "Z": 2, "S": 1,
        "kernel": [[[[[1.0], [0.0]], [[0.0], [0.0]]], [[[0.0], [0.0]], [[0.0], [1.0]]]]]}"#,
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = fsbc(&[
        "simulate",
        "--spec",
        noiseless.to_str().unwrap(),
        "--r1",
        "0",
        "--r2",
        "0.5",
        "--K",
        "4",
        "--trials",
        "500",
        "--lambdas",
        "3",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = read_json(&out.join("simulation.json"));
    let run = &r["runs"][0];
    assert_eq!(run["m2"], 4);
    // Distinct codewords decode perfectly; coincident ones cannot.
    let exact = run["exact"][0]["p_e"].as_f64().unwrap();
    assert_eq!(run["errors"]["p_e"].as_f64().unwrap() == 0.0, exact == 0.0);
}

#[test]
fn supadd_reports_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec("memoryless_bsbc.json");
    let o = fsbc(&[
        "supadd",
        "--spec",
        s.to_str().unwrap(),
        "--n",
        "2",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&tmp.path().join("supadd.json"));
    assert_eq!(r["trend"]["violations"], 0);
    assert_eq!(r["trend"]["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn validate_writes_normalized_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let s = spec("octal_two_state.json");
    let o = fsbc(&[
        "validate",
        "--spec",
        s.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&tmp.path().join("spec.normalized.json"));
    assert_eq!(v["X"], 8);
}
