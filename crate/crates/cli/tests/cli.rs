use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aid")).args(args).output().expect("binary runs")
}

fn lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).expect("each log line is JSON")).collect()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn lad_runs_to_the_gap_and_matches_the_oracle() {
    let log = lines(&stdout(&aid(&["lad", "--n", "1000", "--m", "5", "--seed", "7", "--oracle"])));
    assert_eq!(log[0]["type"], "header");
    assert_eq!(log[0]["seed"], 7);
    let summary = log.last().unwrap();
    assert_eq!(summary["type"], "summary");
    assert!(summary["gap"].as_f64().unwrap() <= 1e-3);
    // Within the gap of the LP optimum.
    assert!(summary["metrics"]["delta"].as_f64().unwrap().abs() <= 1e-3);

    let iters: Vec<&Value> = log.iter().filter(|l| l["type"] == "iteration").collect();
    assert_eq!(iters.len(), summary["iterations"].as_u64().unwrap() as usize + 1);
    for (t, rec) in iters.iter().enumerate() {
        assert_eq!(rec["t"], t);
        for key in ["num_clusters", "rate", "f", "e", "e_best", "gap", "solve_time", "evaluate_time", "decluster_time"] {
            assert!(!rec[key].is_null(), "missing {key}");
        }
    }
}

#[test]
fn header_reconstructs_the_run() {
    let a = lines(&stdout(&aid(&["lad", "--n", "300", "--m", "3", "--seed", "4", "--tol", "0"])));
    let b = lines(&stdout(&aid(&["lad", "--n", "300", "--m", "3", "--seed", "4", "--tol", "0"])));
    let c = lines(&stdout(&aid(&["lad", "--n", "300", "--m", "3", "--seed", "5", "--tol", "0"])));
    assert_eq!(a[0], b[0]);
    assert_ne!(a[0]["config_digest"], c[0]["config_digest"]);
    assert_eq!(a[0]["spec"]["source"]["spec"]["n"], 300);
    assert_eq!(a[0]["spec"]["config"]["gap_tolerance"], 0.0);
    let clusters = |log: &[Value]| log.iter().map(|l| l["num_clusters"].clone()).collect::<Vec<_>>();
    assert_eq!(clusters(&a), clusters(&b));
}

#[test]
fn compare_singleton_start_has_zero_delta() {
    for problem in ["lad", "svm"] {
        let m: Value = serde_json::from_str(&stdout(&aid(&["compare", problem, "--n", "60", "--m", "2", "--r0", "1"]))).unwrap();
        assert_eq!(m["delta"], 0.0, "{problem}");
        assert!(m["rho"].as_f64().unwrap() > 0.0);
        assert_eq!(m["final_rate"], 1.0);
    }
}

#[test]
fn compare_reports_gamma_for_classification_only() {
    let lad: Value = serde_json::from_str(&stdout(&aid(&["compare", "lad", "--n", "80", "--m", "2", "--tol", "0"]))).unwrap();
    assert!(lad["gamma"].is_null());
    assert!(lad["delta"].as_f64().unwrap().abs() <= 1e-6);
    let svm: Value = serde_json::from_str(&stdout(&aid(&["compare", "svm", "--n", "200", "--m", "3", "--tol", "0"]))).unwrap();
    assert!(svm["gamma"].is_number());
}

#[test]
fn svm_from_svmlight_file_with_model_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.svmlight");
    let mut text = String::new();
    for i in 0..40 {
        let y = if i % 2 == 0 { 1 } else { -1 };
        let a = y as f64 * (1.0 + (i % 5) as f64 * 0.3);
        text.push_str(&format!("{y} 1:{a} 2:{}\n", (i % 7) as f64 * 0.1));
    }
    fs::write(&data, text).unwrap();
    let model = dir.path().join("model.json");
    let log = dir.path().join("run.jsonl");
    let out = aid(&[
        "svm",
        "--input",
        data.to_str().unwrap(),
        "--M",
        "0.1",
        "--model",
        model.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(stdout(&out).is_empty());
    let saved = aid_core::data::load_model(&model).unwrap();
    assert_eq!(saved.dims, 2);
    let log = lines(&fs::read_to_string(&log).unwrap());
    assert_eq!(log[0]["spec"]["params"]["svm"]["penalty"], 0.1);
    assert_eq!(saved.metadata.config_digest, log[0]["config_digest"].as_str().unwrap());
    assert_eq!(log.last().unwrap()["training_accuracy"], 1.0);
}

#[test]
fn s3vm_single_iteration() {
    let log = lines(&stdout(&aid(&["s3vm", "--n", "40", "--m", "2", "--labeled-fraction", "0.5", "--iterations", "1"])));
    let summary = log.last().unwrap();
    assert!(summary["iterations"].as_u64().unwrap() <= 1);
    assert!(summary["gap"].is_null());
    assert_eq!(log[0]["spec"]["params"]["s3vm"]["labeled_penalty"], 5.0);
}

#[test]
fn diagnose_rates_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rates.csv");
    let out = aid(&["diagnose-rates", "lad", "--n", "2000", "--m", "5", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert!(stdout(&out).is_empty());
    let text = fs::read_to_string(&csv).unwrap();
    let mut rows = text.lines();
    assert_eq!(
        rows.next().unwrap(),
        "t,num_clusters,rate,near_entries,far_entries,near_clusters,far_clusters,near_rate,far_rate"
    );
    let rows: Vec<Vec<f64>> = rows.map(|r| r.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 2);
    for r in &rows {
        assert_eq!(r[5] + r[6], r[1]);
        assert_eq!(r[3] + r[4], 2000.0);
    }
    let near: Vec<f64> = rows.iter().map(|r| r[7]).collect();
    assert!(near.windows(2).all(|w| w[1] >= w[0]), "near rates {near:?}");
}

#[test]
fn exit_codes() {
    assert_eq!(aid(&["lad", "--bogus"]).status.code(), Some(2));
    assert_eq!(aid(&["lad", "--r0", "5"]).status.code(), Some(2));
    assert_eq!(aid(&["svm", "--kernel", "poly"]).status.code(), Some(2));
    assert_eq!(aid(&["diagnose-rates", "s3vm"]).status.code(), Some(2));

    let missing = aid(&["svm", "--input", "/definitely/missing.svmlight"]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.svmlight"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,y\n1,2,3\n1,oops,4\n").unwrap();
    let out = aid(&["lad", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn intercept_adds_a_column() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    stdout(&aid(&["lad", "--n", "200", "--m", "2", "--intercept", "--model", model.to_str().unwrap()]));
    assert!(Path::new(&model).exists());
    assert_eq!(aid_core::data::load_model(&model).unwrap().dims, 3);
}
