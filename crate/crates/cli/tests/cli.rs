use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kppfront"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("run-manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn curves_writes_one_row_per_delay() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["curves", "--tau-min", "0", "--tau-max", "2", "--n", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tau,c_star,c_starstar"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    assert!(rows[0].ends_with(",inf,inf"));
    assert!(rows[199].contains("below2"));
    let m = manifest(dir.path());
    assert_eq!(m["command"], "curves");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["summary"]["rows"], 200);
    assert!(m["outputs"].as_array().unwrap().iter().any(|p| p.as_str().unwrap().ends_with("curves.csv")));
}

#[test]
fn sub_minimal_speed_is_a_compute_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["front", "--c", "1.5", "--tau", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("below the minimal admissible speed"), "{err}");
    let m = manifest(dir.path());
    assert_eq!(m["exit_code"], 1);
    assert!(m["error"].as_str().unwrap().contains("minimal admissible speed"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["curves", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["bounds", "--c", "2", "--tau", "-1"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["sweep", "--tau", "1:0:0.1", "--c", "2:3:0.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn bounds_prints_the_box() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["bounds", "--c", "2", "--tau", "1.2", "--out", "b.json"]);
    assert!(out.status.success());
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let saved: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
    assert_eq!(printed, saved);
    for key in ["L", "U", "L_e", "U_e", "B_star"] {
        assert!(printed[key].is_number(), "missing {key}");
    }
    let (l, u) = (printed["L"].as_f64().unwrap(), printed["U"].as_f64().unwrap());
    assert!(l < 0.0 && u > 0.0);
}

#[test]
fn map_orbit_has_steps_plus_one_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["map", "--c", "2", "--tau", "1.2", "--x0", "0.5", "--steps", "10"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0], "0,5.0000000000000000e-1");
}

#[test]
fn json_format_switches_tabular_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--format", "json", "curves", "--tau-min", "0", "--tau-max", "1.9", "--n", "3"]);
    assert!(out.status.success());
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("curves.json")).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["c_star"], "inf");
    assert_eq!(rows[2]["c_starstar"], "below2");
}

#[test]
fn front_and_classify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["front", "--c", "3", "--tau", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["c"], 3.0);
    let profile = dir.path().join("profile.csv");
    let out = run(
        dir.path(),
        &["classify", "--in", profile.to_str().unwrap(), "--c", "3", "--tau", "0.2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let class: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("classification.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(class["kind"], "Monotone");
}

#[test]
fn outputs_are_reproducible() {
    let read = |args: &[&str], file: &str| {
        let dir = tempfile::tempdir().unwrap();
        assert!(run(dir.path(), args).status.success());
        std::fs::read(dir.path().join(file)).unwrap()
    };
    let sweep = ["sweep", "--tau", "0:1:0.5", "--c", "2:3:0.5", "--evidence", "none"];
    assert_eq!(read(&sweep, "plane.csv"), read(&sweep, "plane.csv"));
    let sim = [
        "simulate", "--tau", "0.5", "--xmax", "60", "--tend", "5", "--no-guard",
    ];
    assert_eq!(read(&sim, "field.bin"), read(&sim, "field.bin"));
}
