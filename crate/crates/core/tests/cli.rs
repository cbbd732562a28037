use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bmadmm"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn solve_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (trace, summary) = (dir.path().join("t.csv"), dir.path().join("s.json"));
    let status = bin()
        .args(["solve", "--input"])
        .arg(data("triangle.txt"))
        .args(["--alg", "admm", "--seed", "1", "--trace-every", "5", "--no-wall-clock", "--trace"])
        .arg(&trace)
        .arg("--summary")
        .arg(&summary)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "k,objective,lagrangian,primal_res,step_tilde,step_sigma,min_gamma,seconds");
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["status"], "Converged");
    assert_eq!(s["n"], 3);
    assert!((s["final_objective"].as_f64().unwrap() + 2.25).abs() < 1e-6);
    assert_eq!(s["certified"], true);
}

#[test]
fn gen_so3_then_prox_solve() {
    let dir = tempfile::tempdir().unwrap();
    let bin_path = dir.path().join("so3.bin");
    let out = bin().args(["gen-so3", "--q", "12", "--s", "0.4", "--seed", "3", "--out"]).arg(&bin_path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(bin_path.exists());

    let trace = dir.path().join("t.jsonl");
    let out = bin()
        .args(["solve", "--input"])
        .arg(&bin_path)
        .args(["--alg", "prox-admm", "--max-iter", "50000", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n"], 36);
    let first = std::fs::read_to_string(&trace).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert!(rec.get("primal_res").is_some());
}

#[test]
fn bad_input_exits_three() {
    let out = bin().args(["solve", "--input", "/nonexistent/graph.txt"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["solve", "--input"]).arg(data("edge.txt")).args(["--alg", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn iteration_cap_exits_two() {
    let out = bin().args(["solve", "--input"]).arg(data("petersen.txt")).args(["--max-iter", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
