use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasespace")).args(args).current_dir(dir).output().expect("spawn")
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("error JSON on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn non_hermitian_state_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"dim":2,"matrix":[[[1,0],[0.5,0]],[[0,0],[0,0]]]}"#).unwrap();
    let out = run(tmp.path(), &["wigner", "eval", "--family", "su2", "--j", "0.5", "--state", "bad.json", "--grid", "4x4"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "not_hermitian");
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["metrics", "purity", "--family", "su2", "--state", "spin_up"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");
    let out = run(tmp.path(), &["dfe", "--target", "bell", "--state", "bell", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn monte_carlo_tolerance_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["kernel", "verify", "--family", "sun", "--n", "3", "--mode", "monte-carlo", "--samples", "2000"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "tolerance");
}

#[test]
fn metrics_report_values() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["metrics", "negativity", "--family", "su2", "--j", "0.5", "--state", "spin_up"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.077350).abs() < 1e-5);
}

#[test]
fn q_function_matches_transformed_wigner() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let base = ["--family", "su2", "--j", "1", "--state", "spin_up", "--grid", "6x8"];
    let mut w = vec!["wigner", "eval"];
    w.extend(base);
    w.extend(["--out", "w.csv"]);
    assert!(run(d, &w).status.success());
    let mut q = vec!["qfunc", "eval"];
    q.extend(base);
    q.extend(["--out", "q.csv"]);
    assert!(run(d, &q).status.success());
    let t = run(d, &["transform", "--family", "su2", "--j", "1", "--from-s", "0", "--to-s", "-1", "--in", "w.csv", "--out", "t.csv"]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    let read = |name: &str| -> Vec<f64> {
        let mut r = csv::Reader::from_path(d.join(name)).unwrap();
        let col = r.headers().unwrap().iter().position(|h| h == "value").unwrap();
        r.records().map(|rec| rec.unwrap()[col].parse().unwrap()).collect()
    };
    let (qv, tv) = (read("q.csv"), read("t.csv"));
    assert_eq!(qv.len(), tv.len());
    for (a, b) in qv.iter().zip(&tv) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn evolve_writes_snapshot_and_replays() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = run(d, &["evolve", "--hamiltonian", "harmonic", "--state", "vacuum", "--cutoff", "10", "--grid", "64x64", "--steps", "5", "--out", "s.bin"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(d.join("s.bin")).unwrap();
    assert_eq!(&bytes[..8], b"PSGRID01");
    assert_eq!(bytes.len(), 80 + 64 * 64 * 8);
    let rep = run(d, &["replay", "s.bin.manifest.json"]);
    assert!(rep.status.success());
}

#[test]
fn tampered_output_fails_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(run(d, &["dfe", "--target", "bell", "--state", "bell_psi_plus", "--samples", "100", "--seed", "2", "--out", "f.json"]).status.success());
    let m = d.join("f.json.manifest.json");
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(&m).unwrap()).unwrap();
    v["outputs"][0]["sha256"] = serde_json::Value::String("0".repeat(64));
    std::fs::write(&m, v.to_string()).unwrap();
    let rep = run(d, &["replay", "f.json.manifest.json"]);
    assert_eq!(rep.status.code(), Some(1));
}
