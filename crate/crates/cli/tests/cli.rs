use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/five_bus.json")
}

fn rescon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rescon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn fixture_str() -> String {
    fixture().to_str().unwrap().to_owned()
}

#[test]
fn analyze_five_bus_is_resilient() {
    let o = rescon(&["analyze", &fixture_str()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("no resilient structurally fixed modes"));

    let o = rescon(&["--json", "analyze", &fixture_str(), "--budget", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // nominal + 4 links + 4 actuators + 2 sensors
    assert_eq!(v["scenarios"].as_array().unwrap().len(), 11);
    assert_eq!(v["has_fixed_modes"], false);
}

#[test]
fn analyze_without_links_reports_violations() {
    let dir = TempDir::new().unwrap();
    let mut sys: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture()).unwrap()).unwrap();
    sys["links"] = Value::Array(vec![]);
    sys["failures"] = Value::Array(vec![]);
    let path = write(&dir, "open.json", &sys.to_string());
    let o = rescon(&["analyze", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("uncovered states"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.json", "{\"n\": ");
    assert_eq!(rescon(&["analyze", &path]).status.code(), Some(2));
    assert_eq!(
        rescon(&["analyze", "/nonexistent/system.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(rescon(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn failure_outside_links_exits_2() {
    let dir = TempDir::new().unwrap();
    let failures = write(&dir, "f.json", r#"[{"links": [[2, 1]]}]"#);
    let o = rescon(&["analyze", &fixture_str(), "--failures", &failures]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn codesign_five_bus() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sol.json");
    let o = rescon(&[
        "codesign",
        &fixture_str(),
        "--k",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("verification over 11 scenarios: passed"));
    let sol: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(sol["actuators"], serde_json::json!([11, 13, 11, 13]));
    assert_eq!(sol["sensors"], serde_json::json!([10, 12]));
    assert_eq!(
        sol["links"],
        serde_json::json!([[1, 1], [1, 2], [2, 3], [2, 4]])
    );

    let o = rescon(&["--json", "codesign", &fixture_str(), "--k", "0"]);
    let sol: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(sol["actuators"].as_array().unwrap().len(), 2);
    assert_eq!(sol["sensors"].as_array().unwrap().len(), 1);
    assert_eq!(sol["links"].as_array().unwrap().len(), 2);
}

#[test]
fn codesign_chain_needs_stabilization_mode() {
    let dir = TempDir::new().unwrap();
    let chain = write(&dir, "chain.json", r#"{"n": 3, "A": [[2, 1], [3, 2]]}"#);
    let o = rescon(&["codesign", &chain, "--k", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mode stabilization"));
    let o = rescon(&["codesign", &chain, "--k", "0", "--mode", "stabilization"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

fn gain_file(dir: &TempDir, k: &str) -> String {
    write(
        dir,
        "gain.json",
        &format!(r#"{{"p": 4, "m": 2, "links": [[1,1],[1,2],[2,3],[2,4]], "K": {k}}}"#),
    )
}

#[test]
fn verify_printed_gain() {
    let dir = TempDir::new().unwrap();
    let gain = gain_file(
        &dir,
        "[[0.6445, 0.0], [-0.3043, 0.0], [0.0, -1.0079], [0.0, -0.0000043329]]",
    );
    let o = rescon(&["--json", "verify", &fixture_str(), "--gain", &gain]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let block: Vec<f64> = v["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["block_radius"].as_f64().unwrap())
        .collect();
    for (b, w) in block.iter().zip([0.9918, 0.9981, 0.9983, 0.9989, 0.9918]) {
        assert!((b - w).abs() < 1e-3, "{b} vs {w}");
    }
    // A + BKC itself is not Schur for this gain.
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_zero_gain_reports_open_loop() {
    let dir = TempDir::new().unwrap();
    let gain = gain_file(&dir, "[[0, 0], [0, 0], [0, 0], [0, 0]]");
    let o = rescon(&["verify", &fixture_str(), "--gain", &gain]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("open-loop spectral radius 1.0071"));
}

#[test]
fn verify_rejects_gain_outside_pattern() {
    let dir = TempDir::new().unwrap();
    let gain = gain_file(&dir, "[[1, 1], [0, 0], [0, 0], [0, 0]]");
    assert_eq!(
        rescon(&["verify", &fixture_str(), "--gain", &gain])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn stabilize_scalar_plants() {
    let dir = TempDir::new().unwrap();
    let unstable = write(
        &dir,
        "u.json",
        r#"{"n":1,"p":1,"m":1,"A_values":[[1,1,1.5]],"B_values":[[1,1,1.0]],"C_values":[[1,1,1.0]],"links":[[1,1]]}"#,
    );
    let o = rescon(&["--json", "stabilize", &unstable]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = v["gain"]["K"][0][0].as_f64().unwrap();
    assert!(k > -2.5 && k < -0.5);

    let no_links = write(
        &dir,
        "n.json",
        r#"{"n":1,"p":1,"m":1,"A_values":[[1,1,1.5]],"B_values":[[1,1,1.0]],"C_values":[[1,1,1.0]]}"#,
    );
    let o = rescon(&["stabilize", &no_links]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));

    let stable = write(
        &dir,
        "s.json",
        r#"{"n":1,"p":1,"m":1,"A_values":[[1,1,0.5]],"B_values":[[1,1,1.0]],"C_values":[[1,1,1.0]]}"#,
    );
    let o = rescon(&["--json", "stabilize", &stable]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["gain"]["K"][0][0].as_f64(), Some(0.0));
}

#[test]
fn stabilize_accepts_codesign_output() {
    let dir = TempDir::new().unwrap();
    let sys = write(
        &dir,
        "s.json",
        r#"{"n":1,"p":1,"m":1,"A_values":[[1,1,1.5]],"B_values":[[1,1,1.0]],"C_values":[[1,1,1.0]]}"#,
    );
    let sol = dir.path().join("sol.json");
    assert_eq!(
        rescon(&["codesign", &sys, "--k", "0", "--out", sol.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let o = rescon(&["stabilize", &sys, "--pattern", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
#[ignore = "runs the full 5-bus synthesis (a few minutes)"]
fn stabilize_five_bus() {
    let o = rescon(&["--json", "stabilize", &fixture_str()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["report"]["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["schur"] == true));
}

#[test]
fn export_dot() {
    let dir = TempDir::new().unwrap();
    let single = write(&dir, "one.json", r#"{"n": 1, "A": [[1, 1]]}"#);
    let dot = stdout(&rescon(&["export-dot", &single]));
    assert_eq!(dot.matches("shape=").count(), 1);
    assert_eq!(dot.matches("->").count(), 1);

    let open = stdout(&rescon(&["export-dot", &fixture_str()]));
    assert_eq!(open.matches("subgraph cluster_").count(), 3);

    let closed = stdout(&rescon(&["export-dot", &fixture_str(), "--closed-loop"]));
    assert_eq!(closed.matches("shape=").count(), 24);
    assert_eq!(
        closed,
        stdout(&rescon(&["export-dot", &fixture_str(), "--closed-loop"]))
    );

    let failed = stdout(&rescon(&["export-dot", &fixture_str(), "--scenario", "2"]));
    assert_eq!(
        failed.matches("feedback").count() + 1,
        closed.matches("feedback").count()
    );

    assert_eq!(
        rescon(&["export-dot", &fixture_str(), "--scenario", "9"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn shipped_fixture_matches_library() {
    use rescon::fixtures::*;
    let sys =
        rescon::io::SystemFile::from_json(&std::fs::read_to_string(fixture()).unwrap()).unwrap();
    assert_eq!(sys.realization().unwrap(), five_bus_realization());
    assert_eq!(sys.link_set().unwrap(), five_bus_links());
    assert_eq!(sys.failure_collection(), five_bus_failures());
}
