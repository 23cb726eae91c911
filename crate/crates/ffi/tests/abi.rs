use std::ffi::{c_char, CStr, CString};
use std::ptr;

use ishikawa_lab_ffi::*;

fn last_error() -> String {
    let p = il_last_error_message();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { il_string_free(p) };
    s
}

fn load(source: &str) -> *mut IlConfig {
    let src = CString::new(source).unwrap();
    let mut cfg = ptr::null_mut();
    let st = unsafe { il_config_load(src.as_ptr(), &mut cfg) };
    assert_eq!(st, IlStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn norm_and_duality_map() {
    let x = [3.0, -4.0];
    let mut n = 0.0;
    assert_eq!(unsafe { il_norm(2.0, x.as_ptr(), 2, &mut n) }, IlStatus::Ok);
    assert!((n - 5.0).abs() < 1e-15);
    let mut j = [0.0; 2];
    assert_eq!(unsafe { il_duality_map(3.0, x.as_ptr(), 2, j.as_mut_ptr()) }, IlStatus::Ok);
    // ⟨x, Jx⟩ = ‖x‖²
    let n3 = (27.0f64 + 64.0).cbrt();
    assert!(((x[0] * j[0] + x[1] * j[1]) - n3 * n3).abs() < 1e-12);

    assert_eq!(unsafe { il_norm(1.0, x.as_ptr(), 2, &mut n) }, IlStatus::ConfigError);
    assert!(last_error().contains("uniformly smooth"));
    assert_eq!(unsafe { il_norm(2.0, ptr::null(), 2, &mut n) }, IlStatus::NullPointer);
    assert_eq!(unsafe { il_norm(2.0, x.as_ptr(), 2, ptr::null_mut()) }, IlStatus::NullPointer);
}

#[test]
fn config_errors_are_reported() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new("{ not json").unwrap();
    assert_eq!(unsafe { il_config_from_json(bad.as_ptr(), &mut cfg) }, IlStatus::ConfigError);
    assert!(cfg.is_null());
    assert!(!last_error().is_empty());

    let invalid = [0xffu8, 0xfe, 0];
    let st = unsafe { il_config_from_json(invalid.as_ptr().cast(), &mut cfg) };
    assert_eq!(st, IlStatus::InvalidUtf8);
    assert_eq!(unsafe { il_config_from_json(ptr::null(), &mut cfg) }, IlStatus::NullPointer);

    let missing = CString::new("/nonexistent/cfg.json").unwrap();
    assert_eq!(unsafe { il_config_load(missing.as_ptr(), &mut cfg) }, IlStatus::Io);
    let unknown = CString::new("preset:nope").unwrap();
    assert_eq!(unsafe { il_config_load(unknown.as_ptr(), &mut cfg) }, IlStatus::ConfigError);
}

#[test]
fn json_round_trip_through_handles() {
    let cfg = load("preset:yao_demo");
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { il_config_to_json(cfg, &mut text) }, IlStatus::Ok);
    let json = CString::new(take_string(text)).unwrap();
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { il_config_from_json(json.as_ptr(), &mut again) }, IlStatus::Ok);
    assert_eq!(unsafe { il_config_dim(again) }, 2);
    unsafe {
        il_config_free(again);
        il_config_free(cfg);
    }
}

#[test]
fn validate_reports_status() {
    let cfg = load("preset:ishikawa_errors_demo");
    let label = CString::new("3.2").unwrap();
    let mut passed = false;
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { il_validate(cfg, label.as_ptr(), &mut passed, &mut report) }, IlStatus::Ok);
    assert!(passed);
    let v: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
    assert!(v.is_object());

    let wrong = CString::new("3.3").unwrap();
    assert_eq!(unsafe { il_validate(cfg, wrong.as_ptr(), &mut passed, ptr::null_mut()) }, IlStatus::ConfigError);
    let junk = CString::new("9.9").unwrap();
    assert_eq!(unsafe { il_validate(cfg, junk.as_ptr(), &mut passed, ptr::null_mut()) }, IlStatus::ConfigError);
    unsafe { il_config_free(cfg) };

    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/presets/halpern_rotation.json")).unwrap())
            .unwrap();
    v["schedules"]["alpha"] = serde_json::json!({"family": "power", "c": 1.0, "rho": 2.0, "offset": 1});
    let text = CString::new(v.to_string()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { il_config_from_json(text.as_ptr(), &mut cfg) }, IlStatus::Ok);
    let label = CString::new("2.1").unwrap();
    let st = unsafe { il_validate(cfg, label.as_ptr(), &mut passed, ptr::null_mut()) };
    assert_eq!(st, IlStatus::ValidationFailed);
    assert!(!passed);
    unsafe { il_config_free(cfg) };
}

#[test]
fn run_and_read_trajectory() {
    let cfg = load("preset:halpern_rotation");
    let reference = [0.0, 0.0];
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { il_run(cfg, reference.as_ptr(), 2, &mut traj) }, IlStatus::Ok);
    let len = unsafe { il_trajectory_len(traj) };
    assert!(len > 2);
    let reason = unsafe { CStr::from_ptr(il_trajectory_stop_reason(traj)) };
    assert_eq!(reason.to_str().unwrap(), "residual_below_tol");

    let mut x = [0.0; 2];
    let mut r = -1.0;
    assert_eq!(unsafe { il_trajectory_iterate(traj, 0, x.as_mut_ptr(), 2, &mut r) }, IlStatus::Ok);
    assert_eq!(x, [1.2, 0.7]);
    assert!(r > 0.0);
    assert_eq!(unsafe { il_trajectory_iterate(traj, len, x.as_mut_ptr(), 2, ptr::null_mut()) }, IlStatus::ConfigError);
    assert_eq!(unsafe { il_trajectory_iterate(traj, 0, x.as_mut_ptr(), 3, ptr::null_mut()) }, IlStatus::ConfigError);

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { il_trajectory_csv(traj, &mut csv) }, IlStatus::Ok);
    let csv = take_string(csv);
    assert!(csv.starts_with("n,alpha,beta,residual,dist,x_0,x_1,y_0,y_1\n"));
    assert_eq!(csv.lines().count(), len + 1);

    let bad_ref = [0.0; 3];
    let mut other = ptr::null_mut();
    assert_eq!(unsafe { il_run(cfg, bad_ref.as_ptr(), 3, &mut other) }, IlStatus::ConfigError);
    assert!(other.is_null());
    unsafe {
        il_trajectory_free(traj);
        il_config_free(cfg);
    }
}

#[test]
fn divergence_returns_trajectory() {
    let json = r#"{
  "space": {"dim": 2, "p": 2.0},
  "domain": {"kind": "whole_space"},
  "operator_T": {"kind": "affine", "matrix": [[2.0, 0.0], [0.0, 2.0]], "offset": [0.0, 0.0], "norm_certificate": 1.0},
  "scheme": "mann",
  "variant": "inertial",
  "schedules": {"alpha": {"family": "zero"}},
  "x0": [0.5, 0.0],
  "stop": {"max_iters": 100, "residual_tol": 0.0, "divergence_radius": 1.0},
  "seed": 1
}"#;
    let text = CString::new(json).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { il_config_from_json(text.as_ptr(), &mut cfg) }, IlStatus::Ok);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { il_run(cfg, ptr::null(), 0, &mut traj) }, IlStatus::Diverged);
    assert!(!traj.is_null());
    let reason = unsafe { CStr::from_ptr(il_trajectory_stop_reason(traj)) };
    assert_eq!(reason.to_str().unwrap(), "diverged");
    unsafe {
        il_trajectory_free(traj);
        il_config_free(cfg);
    }
}

#[test]
fn anchor_estimate() {
    let cfg = load("preset:viscosity_segment");
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { il_anchor(cfg, &mut a) }, IlStatus::Ok);
    assert!(unsafe { il_anchor_accepted(a) });
    let mut q = [0.0; 2];
    assert_eq!(unsafe { il_anchor_q_hat(a, q.as_mut_ptr(), 2) }, IlStatus::Ok);
    assert!((q[0] - 1.0).abs() <= 1e-6 && q[1].abs() <= 1e-6, "{q:?}");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { il_anchor_json(a, &mut json) }, IlStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["converged"], serde_json::json!(true));
    unsafe {
        il_anchor_free(a);
        il_config_free(cfg);
    }
}

#[test]
fn anchor_short_path_is_non_convergence() {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/presets/halpern_rotation.json")).unwrap())
            .unwrap();
    v["anchor"]["max_stages"] = serde_json::json!(2);
    let text = CString::new(v.to_string()).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { il_config_from_json(text.as_ptr(), &mut cfg) }, IlStatus::Ok);
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { il_anchor(cfg, &mut a) }, IlStatus::AnchorNonConvergence);
    assert!(!a.is_null());
    assert!(!unsafe { il_anchor_accepted(a) });
    unsafe {
        il_anchor_free(a);
        il_config_free(cfg);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        il_config_free(ptr::null_mut());
        il_trajectory_free(ptr::null_mut());
        il_anchor_free(ptr::null_mut());
        il_string_free(ptr::null_mut());
        assert_eq!(il_trajectory_len(ptr::null()), 0);
        assert!(il_trajectory_stop_reason(ptr::null()).is_null());
        assert!(!il_anchor_accepted(ptr::null()));
        let mut out = ptr::null_mut();
        assert_eq!(il_run(ptr::null(), ptr::null(), 0, &mut out), IlStatus::NullPointer);
    }
    let v = unsafe { CStr::from_ptr(il_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn errors_are_thread_local() {
    let mut n = 0.0;
    let x = [1.0];
    assert_eq!(unsafe { il_norm(0.5, x.as_ptr(), 1, &mut n) }, IlStatus::ConfigError);
    std::thread::spawn(|| assert!(il_last_error_message().is_null())).join().unwrap();
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { il_norm(2.0, x.as_ptr(), 1, &mut n) }, IlStatus::Ok);
    assert!(il_last_error_message().is_null());
}
