use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn degor(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_degor")).args(args).current_dir(dir).output().expect("binary runs")
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn trivial_seed_verifies() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(degor(&["seed", "--family", "trivial", "--n", "3"], dir.path()).status.code(), Some(0));
    let o = degor(&["verify", "seed.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&dir.path().join("verify.json"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["passed"], true);
    assert_eq!(report["summary"]["points"], 27);
    assert!(dir.path().join("residuals.csv").exists());
}

#[test]
fn hurwitz_deformation_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(degor(&["seed", "--family", "hurwitz0", "--degree", "5"], dir.path()).status.code(), Some(0));
    let seed = read(&dir.path().join("seed.json"));
    assert_eq!(seed["n"], 4);
    let o = degor(&["deform", "seed.json", "--g", "2", "--per-axis", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&dir.path().join("deform.json"));
    let rows = report["per_eps"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["flow_residual"].as_f64().unwrap() < 1e-5);
    }
}

#[test]
fn hierarchy_ladder_holds() {
    let dir = tempfile::tempdir().unwrap();
    degor(&["seed", "--family", "hurwitz0", "--degree", "4"], dir.path());
    let o = degor(&["hierarchy", "seed.json", "--per-axis", "2", "--order", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&dir.path().join("jets.json"));
    assert_eq!(report["jets"].as_array().unwrap().len(), 8);
}

#[test]
fn crosscheck_matrix_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = degor(&["crosscheck", "--n", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&dir.path().join("crosscheck.json"));
    let matrix = report["matrix"].as_array().unwrap();
    assert!(!matrix.is_empty());
    assert!(matrix.iter().all(|r| r["pass"] == true));
}

#[test]
fn oracle_reports_stable_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let loop_json = r#"{"n":2,"orders":[-1,0],"coeffs":{"-1":[[[0.1,0],[0,0.1]],[[0,0.1],[-0.1,0]]],"0":[[[1,0],[0,0]],[[0,0],[1,0]]]}}"#;
    std::fs::write(dir.path().join("loop.json"), loop_json).unwrap();
    let o = degor(&["oracle", "loop.json", "--trunc-N", "12", "--u", "[[0.1,0],[-0.1,0]]"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(&dir.path().join("oracle.json"));
    assert_eq!(report["convergence"]["unstable"], false);
    assert!((report["vacuum"][0].as_f64().unwrap() - 1.02).abs() < 1e-12);
}

#[test]
fn non_de_control_fails_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    degor(&["seed", "--family", "random-control", "--n", "3"], dir.path());
    let o = degor(&["verify", "seed.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "tolerance_failure");
    assert_eq!(read(&dir.path().join("verify.json"))["passed"], false);
}

#[test]
fn malformed_input_exits_2_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"family":"bogus"}"#).unwrap();
    for args in [&["verify", "bad.json"][..], &["verify", "missing.json"], &["verify"], &["seed", "--family", "hurwitz0"]] {
        let o = degor(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr_json(&o);
        assert!(err["error"].is_string() && err["message"].is_string(), "{args:?}");
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    degor(&["seed", "--family", "hurwitz0", "--degree", "4"], dir.path());
    let mut runs = Vec::new();
    for _ in 0..2 {
        degor(&["deform", "seed.json", "--per-axis", "2"], dir.path());
        runs.push((std::fs::read(dir.path().join("deform.json")).unwrap(), std::fs::read(dir.path().join("deform.csv")).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn config_values_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    degor(&["seed", "--family", "trivial", "--n", "2"], dir.path());
    std::fs::write(dir.path().join("cfg.json"), r#"{"per_axis": 2, "tol": 1e-3}"#).unwrap();
    let o = degor(&["verify", "seed.json", "--per-axis", "4", "--tol", "1e-9", "--config", "cfg.json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report = read(&dir.path().join("verify.json"));
    assert_eq!(report["summary"]["points"], 4);
    assert_eq!(report["params"]["tol"], 1e-3);

    std::fs::write(dir.path().join("typo.json"), r#"{"tolerance": 1}"#).unwrap();
    assert_eq!(degor(&["verify", "seed.json", "--config", "typo.json"], dir.path()).status.code(), Some(2));
}
