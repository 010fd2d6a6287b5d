use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn hkbundle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkbundle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_run(scenario: &str, extra: &[&str]) -> (i32, Value) {
    let mut args = vec!["run", scenario, "--json"];
    args.extend_from_slice(extra);
    let o = hkbundle(&args);
    let v = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stderr(&o)));
    (o.status.code().unwrap(), v)
}

fn row<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no row {name}"))
}

const FLAT_N8: &str = r#"
name = "flat_n8"

[base]
kind = "flat"

[model]
kind = "bundle"
bundle = "N"

[sampling]
count = 8
seed = 3

[[checks]]
check = "einstein"
lambda = LAMBDA
"#;

#[test]
fn list_names_the_bundled_scenarios() {
    let o = hkbundle(&["list"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    for name in ["n8_flat_qk", "g2_as_ricci_flat", "hkqk_roundtrip_example1"] {
        assert!(out.lines().any(|l| l == name), "{name} missing from list");
    }
}

#[test]
fn bundled_scenario_passes_and_writes_a_report() {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("n8_flat_qk.json");
    let o = hkbundle(&["run", "n8_flat_qk", "--samples", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("4/4 checks passed"), "{table}");

    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["scenario"], "n8_flat_qk");
    assert_eq!(v["seed"], 1);
    assert_eq!(v["samples"], 10);
    assert_eq!(v["all_passed"], true);
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass");
        assert!(c["max_residual"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
    }
    assert_eq!(row(&v, "holonomy_dim")["max_residual"], 0.0);
}

#[test]
fn wrong_einstein_constant_fails_with_exit_one() {
    let path = scratch("flat_n8_wrong.toml", &FLAT_N8.replace("LAMBDA", "-15.0"));
    let (code, v) = json_run(path.to_str().unwrap(), &[]);
    assert_eq!(code, 1);
    assert_eq!(v["all_passed"], false);
    let r = row(&v, "einstein");
    assert_eq!(r["status"], "fail");
    assert!(r["max_residual"].as_f64().unwrap() > 0.5);
    assert!(r["worst_point"].as_array().unwrap().len() == 8);

    let path = scratch("flat_n8_right.toml", &FLAT_N8.replace("LAMBDA", "-16.0"));
    let (code, _) = json_run(path.to_str().unwrap(), &[]);
    assert_eq!(code, 0);
}

#[test]
fn malformed_file_exits_two_with_a_location() {
    let path = scratch("broken.toml", "name = \"broken\"\n[model\nkind = \"bundle\"\n");
    let o = hkbundle(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn malformed_expression_exits_two() {
    let text = r#"
name = "bad_expr"

[base]
kind = "gibbons_hawking"
v = "1 + 1/(u1^2 + u2^2 + u3^2"
theta = { y = "1" }
lo = [0.5, 0.5, 0.5, 0.0]
hi = [1.0, 1.0, 1.0, 1.0]

[model]
kind = "bundle"
bundle = "N"

[[checks]]
check = "closed_4form"
"#;
    let path = scratch("bad_expr.toml", text);
    let o = hkbundle(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("column"), "{}", stderr(&o));
}

#[test]
fn unknown_check_and_missing_file_exit_two() {
    let path = scratch("flat_n8_unknown.toml", &FLAT_N8.replace("\"einstein\"", "\"einstien\"").replace("LAMBDA", "-16.0"));
    assert_eq!(hkbundle(&["run", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hkbundle(&["run", "no/such/scenario.toml"]).status.code(), Some(2));
    assert_eq!(hkbundle(&["run", "n8_flat_qk", "--tolerance", "nonsense=1"]).status.code(), Some(2));
}

#[test]
fn same_seed_gives_the_same_report() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    let (_, a) = json_run("balanced_m6", &["--seed", "17", "--samples", "6"]);
    let (_, b) = json_run("balanced_m6", &["--seed", "17", "--samples", "6"]);
    assert_eq!(strip(a.clone()), strip(b));
    let (_, c) = json_run("balanced_m6", &["--seed", "18", "--samples", "6"]);
    assert_ne!(strip(a)["checks"], strip(c)["checks"]);
}

#[test]
fn tolerance_override_can_fail_a_check() {
    let (code, v) = json_run("n8_flat_qk", &["--samples", "5", "--tolerance", "einstein=0"]);
    assert_eq!(code, 1);
    let r = row(&v, "einstein");
    assert_eq!(r["tolerance"], 0.0);
    assert_eq!(r["status"], "fail");
    assert_eq!(row(&v, "closed_4form")["status"], "pass");
}

#[test]
fn evaluation_error_is_reported_per_check() {
    let text = r#"
name = "domain_error"

[base]
kind = "flat"

[model]
kind = "bundle"
bundle = "Q"
profiles = { kind = "custom", p = "sqrt(t - 10)", q = "exp(2*t)", t_lo = -0.5, t_hi = 0.5 }

[sampling]
count = 4

[[checks]]
check = "einstein"
lambda = 1.0

[[checks]]
check = "quaternion"
"#;
    let path = scratch("domain_error.toml", text);
    let (code, v) = json_run(path.to_str().unwrap(), &[]);
    assert_eq!(code, 1);
    let r = row(&v, "einstein");
    assert_eq!(r["status"], "error");
    assert!(r["max_residual"].is_null());
    assert!(r["message"].as_str().is_some());
    assert_eq!(row(&v, "quaternion")["status"], "pass");
}

#[test]
fn integrate_prints_csv() {
    let o = hkbundle(&["integrate", "--bundle", "L", "--t1", "0.2", "--step", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    let mut lines = out.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with('t'), "{header}");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    let cols = header.split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
    assert!(stderr(&o).contains("constraint drift"));
}
