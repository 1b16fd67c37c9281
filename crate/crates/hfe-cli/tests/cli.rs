use std::process::{Command, Output};

use serde_json::Value;

fn hfe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfe"))
        .args(args)
        .env_remove("HFE_TOL_REL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn malformed_json_is_rejected_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"n\": 1,\n  \"nerve\": [\n").unwrap();
    let o = hfe(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line ") && err.contains("column"), "{err}");
}

#[test]
fn unknown_scenario_and_pipeline_are_rejected() {
    assert_eq!(hfe(&["verify", "no_such_scenario"]).status.code(), Some(2));
    let o = hfe(&["verify", "trivial_r2", "--pipeline", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    // sphere_octa carries no pair cocycle.
    let o = hfe(&["verify", "sphere_octa", "--pipeline", "induce"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn trivial_scenario_passes() {
    let o = hfe(&["verify", "trivial_r2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["constants"]["self_compat_epsilon"], 1);
}

#[test]
fn lift_only_reports_two_classes_on_the_circle() {
    let o = hfe(&["verify", "circle_mobius", "--pipeline", "lift"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["constants"]["lift_classes"], 2);
    assert_eq!(v["pipelines"], serde_json::json!(["lift"]));
}

#[test]
fn json_output_is_deterministic() {
    let a = hfe(&["verify", "abstract_k1_nonorientable", "--seed", "9"]);
    let b = hfe(&["verify", "abstract_k1_nonorientable", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["seed"], 9);
}

#[test]
fn several_files_give_an_array_and_the_worst_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.json");
    std::fs::write(&path, hfe::corpus::get("sphere_octa").unwrap()).unwrap();
    let o = hfe(&["verify", "trivial_r2", path.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().map(Vec::len), Some(2));

    let o = hfe(&["verify", "trivial_r2", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn text_report_has_one_line_per_check() {
    let o = hfe(&["verify", "sphere_octa", "--report", "text"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# scenario sphere_octa"));
    assert!(lines.all(|l| l.ends_with("PASS") || l.contains("FAIL")));
}

#[test]
fn tolerance_override_is_recorded_and_env_is_read() {
    let o = hfe(&["verify", "trivial_r2", "--tolerance", "rel=1e-7"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tolerances"]["rel"].as_f64(), Some(1e-7));

    let o = Command::new(env!("CARGO_BIN_EXE_hfe"))
        .args(["verify", "trivial_r2"])
        .env("HFE_TOL_REL", "1e-8")
        .output()
        .unwrap();
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["tolerances"]["rel"].as_f64(), Some(1e-8));

    let o = hfe(&["verify", "trivial_r2", "--tolerance", "rel=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn impossible_tolerance_fails_checks() {
    let o = hfe(&["verify", "circle_mobius", "--tolerance", "rel=1e-300", "--pipeline", "validate"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn list_and_schema() {
    let o = hfe(&["list-scenarios"]);
    let names: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(names.len(), 5);
    assert!(names.contains(&"torus_grid".to_string()));
    let o = hfe(&["schema"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["title"], "hfe scenario");
}
