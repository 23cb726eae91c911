//! C ABI over `ishikawa-lab`.
//!
//! Every fallible call returns an [`IlStatus`]. On failure a message is kept in
//! thread-local storage and can be read with [`il_last_error_message`]. Handles
//! are opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Strings returned through `char **` out-parameters are
//! released with [`il_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ishikawa_lab::analysis::render_csv;
use ishikawa_lab::anchor::AnchorResult;
use ishikawa_lab::cli::{anchor_for, load_config, validate, Theorem};
use ishikawa_lab::config::ExperimentConfig;
use ishikawa_lab::engine::{run, ProcessConfig, StopReason, TrajectoryRecord};
use ishikawa_lab::error::Error;
use ishikawa_lab::space::{duality_map, SpaceSpec, Vector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    ValidationFailed = 4,
    Diverged = 5,
    AnchorNonConvergence = 6,
    Io = 7,
    Panic = 8,
}

/// Parsed and built experiment config.
pub struct IlConfig {
    exp: ExperimentConfig,
    cfg: ProcessConfig,
}

/// Recorded run.
pub struct IlTrajectory {
    record: TrajectoryRecord,
}

/// Anchor path estimate of the limit point.
pub struct IlAnchor {
    result: AnchorResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> IlStatus {
    match e {
        Error::NonConvergence { .. } => IlStatus::AnchorNonConvergence,
        Error::Io { .. } => IlStatus::Io,
        _ => IlStatus::ConfigError,
    }
}

fn fail(e: Error) -> IlStatus {
    set_error(e.to_string());
    status_of(&e)
}

/// Runs `f`, turning a panic into [`IlStatus::Panic`].
fn guard(f: impl FnOnce() -> IlStatus) -> IlStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IlStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, IlStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(IlStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        set_error(format!("argument is not UTF-8: {e}"));
        IlStatus::InvalidUtf8
    })
}

unsafe fn read_slice<'a>(x: *const f64, len: usize) -> Result<&'a [f64], IlStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if x.is_null() {
        set_error("null array argument");
        return Err(IlStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(x, len))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> IlStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            IlStatus::Ok
        }
        Err(_) => {
            set_error("output contains an interior NUL byte");
            IlStatus::InvalidUtf8
        }
    }
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return IlStatus::NullPointer;
        })+
    };
}

/// Message for the most recent failure on this thread, or NULL.
///
/// The pointer stays valid until the next `il_*` call on the same thread.
#[no_mangle]
pub extern "C" fn il_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn il_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn il_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn store_config(exp: Result<ExperimentConfig, Error>, out: *mut *mut IlConfig) -> IlStatus {
    let built = exp.and_then(|exp| exp.build().map(|cfg| IlConfig { exp, cfg }));
    match built {
        Ok(c) => {
            *out = Box::into_raw(Box::new(c));
            IlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parses a JSON experiment config.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_config_from_json(json: *const c_char, out: *mut *mut IlConfig) -> IlStatus {
    guard(|| {
        nonnull!(out);
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        store_config(ExperimentConfig::from_json(text), out)
    })
}

/// Loads a config file path, or a bundled preset given as `preset:<name>`.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_config_load(source: *const c_char, out: *mut *mut IlConfig) -> IlStatus {
    guard(|| {
        nonnull!(out);
        *out = ptr::null_mut();
        let arg = match read_str(source) {
            Ok(t) => t,
            Err(s) => return s,
        };
        store_config(load_config(arg), out)
    })
}

/// Serializes the config back to JSON.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_config_to_json(cfg: *const IlConfig, out: *mut *mut c_char) -> IlStatus {
    guard(|| {
        nonnull!(cfg, out);
        write_string(out, (*cfg).exp.to_json())
    })
}

/// Dimension of the config's space.
///
/// # Safety
/// `cfg` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn il_config_dim(cfg: *const IlConfig) -> usize {
    if cfg.is_null() {
        0
    } else {
        (*cfg).cfg.space.dim()
    }
}

/// # Safety
/// `cfg` must come from this library and must not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn il_config_free(cfg: *mut IlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Checks the hypotheses of a theorem label ("2.1", "3.1", "3.2", "3.3").
///
/// Writes whether every item passed to `passed` and, when `report_json` is not
/// NULL, the item list as JSON. Returns `ValidationFailed` when an item fails
/// and `ConfigError` when the label does not apply to the config's scheme.
///
/// # Safety
/// `cfg` must be a live handle, `theorem` a NUL-terminated string, `passed`
/// writable; `report_json` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn il_validate(
    cfg: *const IlConfig,
    theorem: *const c_char,
    passed: *mut bool,
    report_json: *mut *mut c_char,
) -> IlStatus {
    guard(|| {
        nonnull!(cfg, passed);
        let label = match read_str(theorem) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let Some(th) = Theorem::parse(label) else {
            set_error(format!("unknown theorem label {label:?}"));
            return IlStatus::ConfigError;
        };
        let report = match validate(&(*cfg).cfg, th) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        *passed = report.passed();
        if !report_json.is_null() {
            let s = write_string(report_json, serde_json::to_string(&report).expect("report serializes"));
            if s != IlStatus::Ok {
                return s;
            }
        }
        if report.passed() {
            IlStatus::Ok
        } else {
            set_error(format!("{} hypotheses of {label} not met", report.failed().count()));
            IlStatus::ValidationFailed
        }
    })
}

/// Runs the iteration. `reference` may be NULL; otherwise it holds `ref_len`
/// coordinates used for the distance column.
///
/// A run stopped by the divergence guard still yields a trajectory in `out`
/// and returns `Diverged`.
///
/// # Safety
/// `cfg` must be a live handle, `reference` valid for `ref_len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn il_run(
    cfg: *const IlConfig,
    reference: *const f64,
    ref_len: usize,
    out: *mut *mut IlTrajectory,
) -> IlStatus {
    guard(|| {
        nonnull!(cfg, out);
        *out = ptr::null_mut();
        let cfg = &(*cfg).cfg;
        let reference = if reference.is_null() {
            None
        } else {
            let coords = match read_slice(reference, ref_len) {
                Ok(c) => c.to_vec(),
                Err(s) => return s,
            };
            match Vector::new(cfg.space, coords) {
                Ok(v) => Some(v),
                Err(e) => return fail(e),
            }
        };
        let record = match run(cfg, reference.as_ref()) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let diverged = record.stop == StopReason::Diverged;
        *out = Box::into_raw(Box::new(IlTrajectory { record }));
        if diverged {
            set_error("stopped by the divergence guard");
            IlStatus::Diverged
        } else {
            IlStatus::Ok
        }
    })
}

/// Number of recorded rows, `x_0` included.
///
/// # Safety
/// `traj` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn il_trajectory_len(traj: *const IlTrajectory) -> usize {
    if traj.is_null() {
        0
    } else {
        (*traj).record.steps.len()
    }
}

/// Stop reason: "max_iters", "residual_below_tol" or "diverged". Static storage.
///
/// # Safety
/// `traj` must be a live handle or NULL (which yields NULL).
#[no_mangle]
pub unsafe extern "C" fn il_trajectory_stop_reason(traj: *const IlTrajectory) -> *const c_char {
    if traj.is_null() {
        return ptr::null();
    }
    match (*traj).record.stop {
        StopReason::MaxIters => c"max_iters".as_ptr(),
        StopReason::ResidualBelowTol => c"residual_below_tol".as_ptr(),
        StopReason::Diverged => c"diverged".as_ptr(),
    }
}

/// Copies `x_index` into `out`, which must hold `len` = dimension entries, and
/// writes its residual `‖x − Tx‖` to `residual` when not NULL.
///
/// # Safety
/// `traj` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn il_trajectory_iterate(
    traj: *const IlTrajectory,
    index: usize,
    out: *mut f64,
    len: usize,
    residual: *mut f64,
) -> IlStatus {
    guard(|| {
        nonnull!(traj, out);
        let rec = &(*traj).record;
        let Some(step) = rec.steps.get(index) else {
            set_error(format!("index {index} out of range for {} rows", rec.steps.len()));
            return IlStatus::ConfigError;
        };
        let x = step.x.coords();
        if len != x.len() {
            set_error(format!("buffer holds {len} values, dimension is {}", x.len()));
            return IlStatus::ConfigError;
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(x);
        if !residual.is_null() {
            *residual = step.residual;
        }
        IlStatus::Ok
    })
}

/// Renders the trajectory as CSV.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_trajectory_csv(traj: *const IlTrajectory, out: *mut *mut c_char) -> IlStatus {
    guard(|| {
        nonnull!(traj, out);
        write_string(out, render_csv(&(*traj).record))
    })
}

/// # Safety
/// `traj` must come from this library and must not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn il_trajectory_free(traj: *mut IlTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Estimates the limit point along the anchor path `t ↓ 0`.
///
/// A path that stops before reaching its tolerance still yields a handle in
/// `out` and returns `AnchorNonConvergence`; an inner solve that fails yields
/// no handle.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_anchor(cfg: *const IlConfig, out: *mut *mut IlAnchor) -> IlStatus {
    guard(|| {
        nonnull!(cfg, out);
        *out = ptr::null_mut();
        let c = &*cfg;
        let result = match anchor_for(&c.exp, &c.cfg) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let converged = result.converged;
        *out = Box::into_raw(Box::new(IlAnchor { result }));
        if converged {
            IlStatus::Ok
        } else {
            set_error("anchor path did not reach its tolerance");
            IlStatus::AnchorNonConvergence
        }
    })
}

/// Copies the estimate into `out`, which must hold `len` = dimension entries.
///
/// # Safety
/// `anchor` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn il_anchor_q_hat(anchor: *const IlAnchor, out: *mut f64, len: usize) -> IlStatus {
    guard(|| {
        nonnull!(anchor, out);
        let q = (*anchor).result.q_hat.coords();
        if len != q.len() {
            set_error(format!("buffer holds {len} values, dimension is {}", q.len()));
            return IlStatus::ConfigError;
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(q);
        IlStatus::Ok
    })
}

/// Whether the estimate converged and passed the variational check.
///
/// # Safety
/// `anchor` must be a live handle or NULL (which yields false).
#[no_mangle]
pub unsafe extern "C" fn il_anchor_accepted(anchor: *const IlAnchor) -> bool {
    !anchor.is_null() && (*anchor).result.accepted()
}

/// Full anchor result as JSON.
///
/// # Safety
/// `anchor` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_anchor_json(anchor: *const IlAnchor, out: *mut *mut c_char) -> IlStatus {
    guard(|| {
        nonnull!(anchor, out);
        write_string(out, serde_json::to_string(&(*anchor).result).expect("anchor result serializes"))
    })
}

/// # Safety
/// `anchor` must come from this library and must not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn il_anchor_free(anchor: *mut IlAnchor) {
    if !anchor.is_null() {
        drop(Box::from_raw(anchor));
    }
}

unsafe fn vector_in(p: f64, x: *const f64, len: usize) -> Result<Vector, IlStatus> {
    let coords = read_slice(x, len)?.to_vec();
    SpaceSpec::new(len, p)
        .and_then(|s| Vector::new(s, coords))
        .map_err(fail)
}

/// `‖x‖_p` of the `len` coordinates at `x`.
///
/// # Safety
/// `x` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn il_norm(p: f64, x: *const f64, len: usize, out: *mut f64) -> IlStatus {
    guard(|| {
        nonnull!(out);
        match vector_in(p, x, len) {
            Ok(v) => {
                *out = v.norm();
                IlStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Normalized duality map of `x` in `l_p`, written to `out` (`len` entries).
///
/// # Safety
/// `x` must be valid for `len` reads and `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn il_duality_map(p: f64, x: *const f64, len: usize, out: *mut f64) -> IlStatus {
    guard(|| {
        nonnull!(out);
        match vector_in(p, x, len) {
            Ok(v) => {
                let j = duality_map(&v);
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(j.coords());
                IlStatus::Ok
            }
            Err(s) => s,
        }
    })
}
