use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rbbtr_harness::matrix::RESULTS_FILE;
use rbbtr_harness::read_csv;

fn rbbtr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbbtr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn rbbtr")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_writes_results_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&rbbtr(
        &["solve", "--problem", "white_holst", "--n", "100", "--variant", "rbbtre", "--out", "run"],
        dir.path(),
    ));
    assert!(out.contains("converged"), "{out}");
    let rows = read_csv(&dir.path().join("run").join(RESULTS_FILE)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].variant, "rbbtre");
    assert!(rows[0].converged());
    let traces: Vec<_> = fs::read_dir(dir.path().join("run"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".trace.json"))
        .collect();
    assert_eq!(traces.len(), 1);
}

#[test]
fn bench_then_profile() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = r#"{
        "problems": [{"name": "extended_rosenbrock", "n": 20}, {"name": "white_holst", "n": 20}],
        "variants": ["gbb", "rbbtr", {"label": "rbbtre", "overrides": {"tau": {"rule": "inverse", "m": 2}}}]
    }"#;
    fs::write(dir.path().join("m.json"), matrix).unwrap();
    stdout(&rbbtr(&["bench", "--matrix", "m.json", "--out", "b", "--workers", "2"], dir.path()));
    let rows = read_csv(&dir.path().join("b").join(RESULTS_FILE)).unwrap();
    assert_eq!(rows.len(), 6);

    let out = stdout(&rbbtr(
        &["profile", "--in", "b/results.csv", "--metric", "iter", "--out", "p.csv"],
        dir.path(),
    ));
    assert!(out.contains("ρ(1)"), "{out}");
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert!(text.starts_with("solver,omega,fraction"));
}

#[test]
fn tdesign_and_certify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    stdout(&rbbtr(&["tdesign", "--t", "3", "--N", "16", "--init", "spiral", "--out", "d"], dir.path()));
    let points = dir.path().join("d").join("t3_n16_rbbtr.points.txt");
    assert!(points.exists());
    let cert: serde_json::Value = serde_json::from_str(&stdout(&rbbtr(
        &["certify", "--points", points.to_str().unwrap(), "--t", "3"],
        dir.path(),
    )))
    .unwrap();
    assert_eq!(cert["n_points"], 16);
    assert!(cert["objective_value"].as_f64().unwrap() < 1e-12);
    assert!(cert["min_singular_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_input_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["solve", "--problem", "no_such_problem", "--n", "10", "--out", "x"],
        vec!["solve", "--problem", "white_holst", "--n", "10", "--variant", "gbb*", "--out", "x"],
        vec!["tdesign", "--t", "25", "--out", "x"],
        vec!["certify", "--points", "missing.txt", "--t", "2"],
        vec!["profile", "--in", "missing.csv", "--out", "p.csv"],
    ] {
        let o = rbbtr(&args, dir.path());
        assert!(!o.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("error"), "{args:?}: {err}");
    }
}
