use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn witten(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_witten")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL_TORUS: &str = r#"{"experiment": "t2", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8}}"#;

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"experiment": "x", "manifold": {"topology": "torus""#);
    let out = dir.path().join("out");
    let o = witten(&["spectra", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());

    let cfg = write(dir.path(), "unknown.json", r#"{"experiment": "x", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8, "colour": 1}}"#);
    let o = witten(&["spectra", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("manifold.colour"));
    assert!(!out.exists());
}

#[test]
fn resolution_cap_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cap.json",
        r#"{"experiment": "cap", "manifold": {"topology": "torus", "dimension": 2, "resolution": 8},
            "function": {"family": "product_cosine", "periods": [1, 1], "amplitudes": [0.1, 0.1], "modes": [1, 1]},
            "t_grid": {"min": 0, "max": 100, "count": 3}}"#,
    );
    let out = dir.path().join("out");
    let o = witten(&["branches", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_grid.max"));
    assert!(!out.exists());
}

#[test]
fn missing_output_directory_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t2.json", SMALL_TORUS);
    assert_eq!(witten(&["spectra", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn spectra_reports_torus_betti_numbers_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t2.json", SMALL_TORUS);
    let out = dir.path().join("out");
    let o = witten(&["spectra", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "11", "--threads", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["header"]["command"], "spectra");
    assert_eq!(summary["body"]["betti"], serde_json::json!([1, 2, 1]));
    let hash = summary["header"]["config_hash"].as_str().unwrap();
    let csv = std::fs::read_to_string(out.join("spectrum_q0.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# config_hash={hash}"));

    let again = dir.path().join("again");
    assert!(witten(&["spectra", "--config", &cfg, "--out", again.to_str().unwrap(), "--seed", "11"]).status.success());
    for name in ["spectrum_q0.csv", "spectrum_q1.csv", "spectrum_q2.csv"] {
        assert_eq!(std::fs::read(out.join(name)).unwrap(), std::fs::read(again.join(name)).unwrap(), "{name}");
    }
    let other = dir.path().join("other");
    assert!(witten(&["spectra", "--config", &cfg, "--out", other.to_str().unwrap(), "--seed", "12"]).status.success());
    let s2: Value = serde_json::from_slice(&std::fs::read(other.join("summary.json")).unwrap()).unwrap();
    assert_ne!(s2["header"]["config_hash"], summary["header"]["config_hash"]);
}
