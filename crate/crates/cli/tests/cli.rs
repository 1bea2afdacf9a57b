//! End-to-end tests of the `treewind` binary: exit codes, output files,
//! determinism, and the machine-readable error contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treewind"))
}

fn trees_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../trees")
}

fn tree(name: &str) -> String {
    trees_dir().join(name).to_string_lossy().into_owned()
}

static DIR_SEQ: AtomicU32 = AtomicU32::new(0);

struct OutDir(PathBuf);

impl OutDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "treewind_cli_{tag}_{}_{}",
            std::process::id(),
            DIR_SEQ.fetch_add(1, Ordering::SeqCst)
        ));
        fs::create_dir_all(&dir).unwrap();
        OutDir(dir)
    }

    fn arg(&self) -> String {
        self.0.to_string_lossy().into_owned()
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.0.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success(), "command unexpectedly succeeded");
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn classify_h_graph() {
    let dir = OutDir::new("classify");
    let out = bin()
        .args(["classify", "--tree", &tree("h_graph.json"), "--out", &dir.arg()])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert_eq!(summary["g"], 2);
    assert_eq!(summary["counts"]["critical"], 2);
    assert_eq!(summary["counts"]["collapsible"], 54);
    assert_eq!(summary["counts"]["residual"], 34);
    let csv = dir.read("h_graph_n2_census.csv");
    assert!(csv.starts_with("cell_id,parts,class,tau,iota,lies_over"));
    assert_eq!(csv.lines().count(), 91);
}

#[test]
fn classify_path_notes_trivial_homology() {
    let dir = OutDir::new("classify_path");
    let out = bin()
        .args(["classify", "--tree", &tree("path_6.json"), "--out", &dir.arg()])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert_eq!(summary["g"], 0);
    assert!(summary["note"].as_str().unwrap().contains("simply connected"));
}

#[test]
fn classify_star4() {
    let dir = OutDir::new("classify_star4");
    let out = bin()
        .args(["classify", "--tree", &tree("star_4.json"), "--out", &dir.arg()])
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["g"], 3);
}

#[test]
fn exact_cov_g1_is_diagonal() {
    let dir = OutDir::new("exactcov");
    let out = bin()
        .args(["exact-cov", "--tree", &tree("g1.json"), "--out", &dir.arg()])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert_eq!(summary["g"], 4);
    let report: serde_json::Value =
        serde_json::from_str(&dir.read("g1_n2_covariance.json")).unwrap();
    let sigma = report["sigma"].as_array().unwrap();
    for (i, row) in sigma.iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            if i != j {
                assert!(v.as_f64().unwrap().abs() < 1e-12, "({i},{j})");
            }
        }
    }
    assert!(report["psd_min_eigenvalue"].as_f64().unwrap() >= -1e-10);
    // Reconciliation section is present and non-empty.
    assert!(!report["reconciliation"].as_array().unwrap().is_empty());
    // Chain export sidecar: states, P, pi, spectrum.
    let chain: serde_json::Value =
        serde_json::from_str(&dir.read("g1_n2_chain.json")).unwrap();
    assert_eq!(chain["states"].as_array().unwrap().len(), 45);
    assert_eq!(chain["p"].as_array().unwrap().len(), 45);
    assert!(chain["delta"].as_f64().unwrap() > 0.0);
    assert!(chain["lazy"].as_bool().unwrap());
}

#[test]
fn exact_cov_star3_inside_bound() {
    let dir = OutDir::new("exactcov_star");
    let out = bin()
        .args(["exact-cov", "--tree", &tree("star_3.json"), "--out", &dir.arg()])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    let diag = summary["sigma_diagonal"][0].as_f64().unwrap();
    assert!(diag > 0.0 && diag <= 1.0 / 36.0 + 1e-15);
    assert!((diag - 1.0 / 108.0).abs() < 1e-12);
}

#[test]
fn exact_cov_with_signs() {
    let dir = OutDir::new("signs");
    let signs_path = dir.0.join("signs.json");
    fs::write(&signs_path, "[-1, 1, 1]").unwrap();
    let out = bin()
        .args([
            "exact-cov",
            "--tree",
            &tree("star_4.json"),
            "--signs",
            signs_path.to_str().unwrap(),
            "--out",
            &dir.arg(),
        ])
        .output()
        .unwrap();
    stdout_json(&out);
    let report: serde_json::Value =
        serde_json::from_str(&dir.read("star_4_n2_covariance.json")).unwrap();
    assert_eq!(report["signs"], serde_json::json!([-1, 1, 1]));
    assert!(!report["sigma_signed"].is_null());
    // Wrong length is rejected.
    fs::write(&signs_path, "[1, 1]").unwrap();
    let out = bin()
        .args([
            "exact-cov",
            "--tree",
            &tree("star_4.json"),
            "--signs",
            signs_path.to_str().unwrap(),
            "--out",
            &dir.arg(),
            "--force",
        ])
        .output()
        .unwrap();
    let err = stderr_json(&out);
    assert!(err["error"].as_str().unwrap().contains("basis has 3"));
}

#[test]
fn simulate_deterministic_and_guarded() {
    let dir = OutDir::new("simulate");
    let args = [
        "simulate",
        "--tree",
        &tree("star_3.json"),
        "--steps",
        "2000",
        "--reps",
        "50",
        "--seed",
        "7",
        "--out",
        &dir.arg(),
    ];
    let out = bin().args(args).output().unwrap();
    stdout_json(&out);
    let first = dir.read("star_3_n2_s7_samples.csv");
    assert!(first.starts_with("rep,t,w_1,pw"));
    assert_eq!(first.lines().count(), 51);
    let meta: serde_json::Value =
        serde_json::from_str(&dir.read("star_3_n2_s7_metadata.json")).unwrap();
    assert_eq!(meta["generator"], "chacha12");
    assert_eq!(meta["seed"], 7);
    assert!(meta["tree_hash"].as_str().unwrap().len() == 16);

    // Overwrite is refused without --force.
    let out = bin().args(args).output().unwrap();
    let err = stderr_json(&out);
    assert!(err["error"].as_str().unwrap().contains("--force"));

    // Same seed + --force + more threads: byte-identical samples.
    let mut forced: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    forced.extend(["--force".to_string(), "--threads".to_string(), "2".to_string()]);
    let out = bin().args(&forced).output().unwrap();
    stdout_json(&out);
    assert_eq!(first, dir.read("star_3_n2_s7_samples.csv"));
}

#[test]
fn simulate_rejects_single_replicate() {
    let dir = OutDir::new("simulate_reps");
    let out = bin()
        .args([
            "simulate",
            "--tree",
            &tree("star_3.json"),
            "--steps",
            "10",
            "--reps",
            "1",
            "--seed",
            "1",
            "--out",
            &dir.arg(),
        ])
        .output()
        .unwrap();
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "simulate");
    assert!(err["error"].as_str().unwrap().contains("2 replicates"));
}

#[test]
fn simulate_trace_writes_trajectories() {
    let dir = OutDir::new("trace");
    let out = bin()
        .args([
            "simulate",
            "--tree",
            &tree("star_3.json"),
            "--steps",
            "20",
            "--reps",
            "2",
            "--seed",
            "3",
            "--trace",
            "--out",
            &dir.arg(),
        ])
        .output()
        .unwrap();
    stdout_json(&out);
    let trace = dir.read("star_3_n2_s3_trace.csv");
    assert!(trace.starts_with("rep,step,state,config"));
    assert_eq!(trace.lines().count(), 1 + 2 * 21);
}

#[test]
fn compare_verdicts() {
    let dir = OutDir::new("compare");
    let out = bin()
        .args([
            "compare",
            "--tree",
            &tree("g1.json"),
            "--tree2",
            &tree("g2.json"),
            "--out",
            &dir.arg(),
        ])
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["verdict"], "distinguished");

    let out = bin()
        .args([
            "compare",
            "--tree",
            &tree("g1.json"),
            "--tree2",
            &tree("g1.json"),
            "--out",
            &dir.arg(),
        ])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert_eq!(summary["verdict"], "identical");
    assert_eq!(summary["max_entry_diff"], 0.0);

    let out = bin()
        .args([
            "compare",
            "--tree",
            &tree("g2.json"),
            "--tree2",
            &tree("g2_flipped.json"),
            "--out",
            &dir.arg(),
        ])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert_eq!(summary["verdict"], "equivalent-up-to-basis");
    let report: serde_json::Value =
        serde_json::from_str(&dir.read("compare_g2_vs_g2_flipped_n2.json")).unwrap();
    assert!(!report["transformation"].is_null());
}

#[test]
fn star_and_complete_reports() {
    let dir = OutDir::new("reports");
    let out = bin()
        .args(["star-report", "--l", "3", "--out", &dir.arg()])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert!(summary["max_residual"].as_f64().unwrap() <= 1e-9);
    assert!((summary["t2_variant_residual"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);

    let out = bin()
        .args(["star-report", "--l", "2", "--out", &dir.arg()])
        .output()
        .unwrap();
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "closedform");

    let out = bin()
        .args(["complete-report", "--n", "3", "--out", &dir.arg()])
        .output()
        .unwrap();
    let summary = stdout_json(&out);
    assert!(summary["diagonal_max_residual"].as_f64().unwrap() <= 1e-12);
    let report: serde_json::Value =
        serde_json::from_str(&dir.read("complete_3_report.json")).unwrap();
    // K_3 diagonal is 1/27; with g = 1 there are no adjacent pairs.
    let diag = report["sigma"][0][0].as_f64().unwrap();
    assert!((diag - 1.0 / 27.0).abs() < 1e-14);
    assert_eq!(report["adjacent_entries"].as_array().unwrap().len(), 0);
}

#[test]
fn error_contract() {
    let dir = OutDir::new("errors");
    // Missing file -> io error.
    let out = bin()
        .args(["classify", "--tree", "/nonexistent/tree.json", "--out", &dir.arg()])
        .output()
        .unwrap();
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "io");
    assert_eq!(err["schema"], 1);
    // Cyclic document -> tree error.
    let bad = dir.0.join("cycle.json");
    fs::write(&bad, r#"{"name":"c","root":"a","children":{"a":["b"],"b":["a"]}}"#).unwrap();
    let out = bin()
        .args(["classify", "--tree", bad.to_str().unwrap(), "--out", &dir.arg()])
        .output()
        .unwrap();
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "tree");
    assert!(err["error"].as_str().unwrap().contains("cycle detected"));
    // Path condition violated -> dconfig error with the offending pair.
    let out = bin()
        .args(["classify", "--tree", &tree("star_3.json"), "--n", "3", "--out", &dir.arg()])
        .output()
        .unwrap();
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "dconfig");
    assert!(err["error"].as_str().unwrap().contains("path condition"));
}
