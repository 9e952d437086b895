use std::io::Write;
use std::process::Command;

use serde_json::Value;

fn leafspace(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_leafspace")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, _) = leafspace(args);
    (code, serde_json::from_str(&out).unwrap())
}

fn scenario_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn betti_on_circle_cover() {
    let (code, v) = json(&["betti", "--scenario", "circle-cover", "--max-degree", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["tasks"][0]["result"]["betti"], serde_json::json!([1, 1, 0, 0]));
    assert_eq!(v["tasks"][0]["result"]["coefficient"], "trivial");
}

#[test]
fn duality_on_z2_reflection() {
    let (code, v) = json(&["duality", "--scenario", "z2-reflection"]);
    assert_eq!(code, 0);
    let pairs = v["tasks"][0]["result"]["duality_pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 7);
    assert!(pairs.iter().all(|p| p == &serde_json::json!([0, 0])));
    assert_eq!(v["tasks"][0]["result"]["pass"], true);
}

#[test]
fn gv_is_closed_on_the_elliptic_fixture() {
    let (code, v) = json(&["cocycle", "--scenario", "mobius-elliptic3", "--class", "gv", "--check-closed"]);
    assert_eq!(code, 0);
    let r = &v["tasks"][0]["result"];
    assert!(r["max_residual"].as_f64().unwrap() < 1e-6);
    assert!(r["components_sampled"].as_u64().unwrap() > 0);
    assert_eq!(r["sign_flag"], -1);
    assert_eq!(v["tasks"][0]["tolerance"], 1e-8);
}

#[test]
fn thurston_triple_and_collapse_check() {
    let (code, v) = json(&["thurston", "--scenario", "mobius-rotations", "--triple", "r4,r5,r1"]);
    assert_eq!(code, 0);
    let t = v["tasks"][0]["result"]["thurston_values"][0].as_f64().unwrap();
    assert!((t + 0.0338592339431153886).abs() < 1e-9);
    let (code, v) = json(&["collapse-check", "--scenario", "mobius-rotations"]);
    assert_eq!(code, 0, "{v}");
    assert!(v["tasks"][0]["result"]["cocycle"]["max_residual"].as_f64().unwrap() < 1e-4);
}

#[test]
fn reports_are_byte_identical() {
    let a = leafspace(&["run", "--scenario", "mobius-elliptic3"]);
    let b = leafspace(&["run", "--scenario", "mobius-elliptic3"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn seed_override_is_reported() {
    let (_, v) = json(&["cocycle", "--scenario", "mobius-elliptic3", "--class", "c1", "--seed", "42"]);
    assert_eq!(v["seed"], 42);
}

#[test]
fn table_output() {
    let (code, out, _) = leafspace(&["run", "--scenario", "z2-reflection", "--report", "table"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("scenario z2-reflection  status pass"));
    assert!(out.contains("result.dimension"));
}

#[test]
fn invalid_table_fails_validation_and_errors_elsewhere() {
    let f = scenario_file(
        "[scenario]\nname = z2bad\n[chart]\nid=U, dim=1, box=[-2,2]\n[embedding]\nid=g, src=U, dst=U, map=\"-x1\"\n[compose]\ng.g=g\n",
    );
    let path = f.path().to_str().unwrap();
    let (code, v) = json(&["validate", "--scenario", path]);
    assert_eq!(code, 1);
    let issues = v["tasks"][0]["result"]["report"]["issues"].as_array().unwrap();
    assert!(issues.iter().any(|i| i["message"].as_str().unwrap().contains("g.g=g")));
    let (code, v) = json(&["betti", "--scenario", path]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "error");
}

#[test]
fn undeclared_chart_is_named() {
    let f = scenario_file("[scenario]\nname = bad\n[chart]\nid=U, dim=1, box=[0,1]\n[embedding]\nid=f, src=U, dst=W, map=\"x1/2\"\n");
    let (code, _, err) = leafspace(&["validate", "--scenario", f.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 6") && err.contains("'W'"), "{err}");
}

#[test]
fn out_of_range_overrides_are_errors() {
    let (code, v) = json(&["betti", "--scenario", "circle-cover", "--max-degree", "13"]);
    assert_eq!(code, 2);
    assert!(v["tasks"][0]["message"].as_str().unwrap().contains("max-degree"));
    let (code, _) = json(&["thurston", "--scenario", "circle-cover", "--triple", "la,lb,ra"]);
    assert_eq!(code, 2);
}
