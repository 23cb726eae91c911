use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ishikawa-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn preset_json(name: &str) -> Value {
    let o = bin(&["catalog", "--show", name]);
    assert_eq!(code(&o), 0);
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Top-level keys in document order.
fn top_keys(text: &str) -> Vec<String> {
    let v: Value = serde_json::from_str(text).unwrap();
    let mut keys: Vec<(usize, String)> = v
        .as_object()
        .unwrap()
        .keys()
        .map(|k| (text.find(&format!("\n  \"{k}\":")).expect("top-level key"), k.clone()))
        .collect();
    keys.sort();
    keys.into_iter().map(|(_, k)| k).collect()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "h.json", &preset_json("halpern_rotation"));
    let out = dir.path().join("h.csv");
    let o = bin(&["run", &cfg, "--out", out.to_str().unwrap(), "--reference", "0,0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("n,alpha,beta,residual,dist,x_0,x_1,y_0,y_1\n"));
    assert!(!csv.contains('\r'));
    let rows = csv.lines().count() - 1;
    assert!((2..=10_001).contains(&rows));
    let text = std::fs::read_to_string(dir.path().join("h.csv.report.json")).unwrap();
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["convergence"]["stop"], "residual_below_tol");
    assert_eq!(report["reference"], json!([0.0, 0.0]));
    assert_eq!(top_keys(&text), ["scheme", "theorem", "seed", "reference", "anchor", "convergence"]);
}

#[test]
fn run_without_reference_leaves_dist_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("y.csv");
    let o = bin(&["run", "preset:yao_demo", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let second = csv.lines().nth(1).unwrap();
    assert_eq!(second.split(',').nth(4), Some(""));
}

#[test]
fn p_equal_one_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("halpern_rotation");
    v["space"]["p"] = json!(1.0);
    let cfg = write_config(dir.path(), "p1.json", &v);
    let o = bin(&["run", &cfg, "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("uniformly smooth"));
}

#[test]
fn unknown_key_and_bad_json_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("viscosity_segment");
    v["stop"]["patience"] = json!(3);
    let cfg = write_config(dir.path(), "k.json", &v);
    assert_eq!(code(&bin(&["validate", &cfg, "--theorem", "3.1"])), 2);
    let p = dir.path().join("broken.json");
    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(code(&bin(&["validate", p.to_str().unwrap(), "--theorem", "3.1"])), 2);
    assert_eq!(code(&bin(&["validate", "/nonexistent/cfg.json", "--theorem", "3.1"])), 2);
}

#[test]
fn divergence_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "space": {"dim": 2, "p": 2.0},
        "domain": {"kind": "whole_space"},
        "operator_T": {"kind": "affine", "matrix": [[2.0, 0.0], [0.0, 2.0]], "offset": [0.0, 0.0], "norm_certificate": 1.0},
        "scheme": "mann",
        "variant": "inertial",
        "schedules": {"alpha": {"family": "zero"}},
        "x0": [0.5, 0.0],
        "stop": {"max_iters": 100, "residual_tol": 0.0, "divergence_radius": 1.0},
        "seed": 1
    });
    let cfg = write_config(dir.path(), "expand.json", &v);
    let o = bin(&["run", &cfg, "--out", dir.path().join("e.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning: operator_T"), "{err}");
    assert!(err.contains("divergence guard"), "{err}");
}

#[test]
fn validate_exit_codes() {
    for (name, theorem) in [
        ("halpern_rotation", "3.1"),
        ("viscosity_segment", "3.1"),
        ("ishikawa_errors_demo", "3.2"),
        ("yao_demo", "3.3"),
    ] {
        let o = bin(&["validate", &format!("preset:{name}"), "--theorem", theorem]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("halpern_rotation");
    v["schedules"]["alpha"] = json!({"family": "power", "c": 1.0, "rho": 2.0, "offset": 1});
    let cfg = write_config(dir.path(), "summable.json", &v);
    let o = bin(&["validate", &cfg, "--theorem", "2.1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL     ] a3"));

    let mut v = preset_json("ishikawa_errors_demo");
    v["schedules"]["alpha"] = json!({"family": "power", "c": 0.25, "rho": 1.0, "offset": 1});
    v["schedules"]["gamma"] = json!({"family": "power", "c": 0.25, "rho": 1.0, "offset": 1});
    let cfg = write_config(dir.path(), "gamma.json", &v);
    let o = bin(&["validate", &cfg, "--theorem", "3.2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL     ] gamma"));

    assert_eq!(code(&bin(&["validate", "preset:halpern_rotation", "--theorem", "3.3"])), 2);
}

#[test]
fn anchor_writes_path_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let o = bin(&["anchor", "preset:viscosity_segment", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("accepted as Q(f)"), "{stdout}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("stage,t,z_0,z_1,inner_iters,inner_residual\n"), "{csv}");
}

#[test]
fn anchor_non_convergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = preset_json("halpern_rotation");
    v["anchor"]["max_stages"] = json!(2);
    let cfg = write_config(dir.path(), "short.json", &v);
    let o = bin(&["anchor", &cfg]);
    assert_eq!(code(&o), 4);
}

#[test]
fn check_and_catalog() {
    let o = bin(&["check", "--suite", "lemma13", "--seed", "5"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("suite lemma13: PASS"));
    let o = bin(&["check", "--suite", "nope"]);
    assert_eq!(code(&o), 2);
    let o = bin(&["catalog", "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        top_keys(&String::from_utf8(o.stdout).unwrap()),
        ["spaces", "domains", "operators", "families", "sequences", "schedules", "schemes", "suites", "presets"]
    );
    assert_eq!(code(&bin(&["catalog", "--wat"])), 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        assert_eq!(code(&bin(&["run", "preset:ishikawa_errors_demo", "--out", out.to_str().unwrap()])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
