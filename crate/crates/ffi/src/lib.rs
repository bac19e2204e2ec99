//! C interface: enthalpy solves and harness studies behind opaque handles.
//!
//! Every function returns an [`SlStatus`]. On failure a message is kept per
//! thread and can be read with [`sl_last_error`] until the next call on the
//! same thread. Handles are freed with their `*_free` function; passing
//! NULL to a free function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stefan_lab::engine::Profile;
use stefan_lab::harness::{self, Command, ExperimentConfig, HarnessError, Study};
use stefan_lab::stefan::{solve_stefan, PdeParams, StefanSolution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Rejected parameters or config document.
    Config = 3,
    /// Solver or simulation failure.
    Runtime = 4,
    OutOfRange = 5,
    /// No interface at the requested sample.
    NoFront = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlCommand {
    Simulate = 0,
    Pde = 1,
    Converge = 2,
    BetaCheck = 3,
    CoupleCheck = 4,
}

/// Opaque solution of an enthalpy solve.
pub struct SlPdeSolution {
    inner: StefanSolution,
}

/// Opaque result of a harness study.
pub struct SlReport {
    study: Study,
    summary: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let bytes: Vec<u8> = msg.into().into_bytes().into_iter().filter(|&b| b != 0).collect();
    let c = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: SlStatus, msg: impl Into<String>) -> SlStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SlStatus::Panic, msg)
        }
    }
}

fn harness_status(e: &HarnessError) -> SlStatus {
    match e {
        HarnessError::Config(_) => SlStatus::Config,
        HarnessError::Runtime(_) => SlStatus::Runtime,
        HarnessError::Io { .. } => SlStatus::Io,
    }
}

fn core_status(e: &stefan_lab::Error) -> SlStatus {
    match e {
        stefan_lab::Error::Parameter { .. } | stefan_lab::Error::Cfl { .. } | stefan_lab::Error::Profile(_) => SlStatus::Config,
        _ => SlStatus::Runtime,
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SlStatus> {
    if s.is_null() {
        return Err(fail(SlStatus::NullArgument, "string argument is NULL"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(SlStatus::InvalidUtf8, e.to_string()))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Solves from the step `left` on (-l, 0), `right` on (0, l), sampling
/// `n_samples` equally spaced times on [0, t_end].
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn sl_pde_solve(
    a_minus: f64,
    a_plus: f64,
    left: f64,
    right: f64,
    l: f64,
    dx: f64,
    t_end: f64,
    n_samples: usize,
    out: *mut *mut SlPdeSolution,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullArgument, "out is NULL");
        }
        *out = ptr::null_mut();
        if n_samples < 2 || !(t_end > 0.0) {
            return fail(SlStatus::Config, "need n_samples >= 2 and t_end > 0");
        }
        let times: Vec<f64> = (0..n_samples).map(|k| t_end * k as f64 / (n_samples - 1) as f64).collect();
        let params = PdeParams::new(a_minus, a_plus, l, dx);
        match solve_stefan(&Profile::step(left, right), &params, &times) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SlPdeSolution { inner }));
                SlStatus::Ok
            }
            Err(e) => fail(core_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `h` must be NULL or a handle from [`sl_pde_solve`].
#[no_mangle]
pub unsafe extern "C" fn sl_pde_num_times(h: *const SlPdeSolution) -> usize {
    h.as_ref().map_or(0, |s| s.inner.times.len())
}

/// # Safety
/// `h` must be NULL or a handle from [`sl_pde_solve`].
#[no_mangle]
pub unsafe extern "C" fn sl_pde_num_cells(h: *const SlPdeSolution) -> usize {
    h.as_ref().map_or(0, |s| s.inner.centers.len())
}

/// # Safety
/// `h` must be a live handle and `t` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_pde_time(h: *const SlPdeSolution, k: usize, t: *mut f64) -> SlStatus {
    guard(|| {
        let (Some(s), false) = (h.as_ref(), t.is_null()) else {
            return fail(SlStatus::NullArgument, "handle or output is NULL");
        };
        match s.inner.times.get(k) {
            Some(&v) => {
                *t = v;
                SlStatus::Ok
            }
            None => fail(SlStatus::OutOfRange, format!("sample {k} of {}", s.inner.times.len())),
        }
    })
}

/// Front position at sample `k`; [`SlStatus::NoFront`] when the profile has
/// no interface.
///
/// # Safety
/// `h` must be a live handle and `b` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_pde_front(h: *const SlPdeSolution, k: usize, b: *mut f64) -> SlStatus {
    guard(|| {
        let (Some(s), false) = (h.as_ref(), b.is_null()) else {
            return fail(SlStatus::NullArgument, "handle or output is NULL");
        };
        match s.inner.front.get(k) {
            Some(Some(v)) => {
                *b = *v;
                SlStatus::Ok
            }
            Some(None) => fail(SlStatus::NoFront, format!("no interface at sample {k}")),
            None => fail(SlStatus::OutOfRange, format!("sample {k} of {}", s.inner.front.len())),
        }
    })
}

/// Copies cell centers (`k == SIZE_MAX`) or the density at sample `k` into
/// `buf`, which must hold `sl_pde_num_cells` values.
///
/// # Safety
/// `h` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sl_pde_copy(h: *const SlPdeSolution, k: usize, buf: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let (Some(s), false) = (h.as_ref(), buf.is_null()) else {
            return fail(SlStatus::NullArgument, "handle or buffer is NULL");
        };
        let src = if k == usize::MAX {
            &s.inner.centers
        } else {
            match s.inner.rho.get(k) {
                Some(r) => r,
                None => return fail(SlStatus::OutOfRange, format!("sample {k} of {}", s.inner.rho.len())),
            }
        };
        if len < src.len() {
            return fail(SlStatus::OutOfRange, format!("buffer holds {len}, need {}", src.len()));
        }
        std::slice::from_raw_parts_mut(buf, src.len()).copy_from_slice(src);
        SlStatus::Ok
    })
}

/// # Safety
/// `h` must be NULL or a handle from [`sl_pde_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_pde_free(h: *mut SlPdeSolution) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs a study from a TOML config document. Failed checks still return
/// [`SlStatus::Ok`]; inspect them with [`sl_report_all_passed`].
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_study_run(command: SlCommand, toml: *const c_char, out: *mut *mut SlReport) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullArgument, "out is NULL");
        }
        *out = ptr::null_mut();
        let text = match read_str(toml) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg = match ExperimentConfig::from_toml_str(text) {
            Ok(c) => c,
            Err(e) => return fail(SlStatus::Config, e.to_string()),
        };
        let cmd = match command {
            SlCommand::Simulate => Command::Simulate,
            SlCommand::Pde => Command::Pde,
            SlCommand::Converge => Command::Converge,
            SlCommand::BetaCheck => Command::BetaCheck,
            SlCommand::CoupleCheck => Command::CoupleCheck,
        };
        match harness::run_study(cmd, &cfg) {
            Ok(study) => {
                let summary = CString::new(study.report.summary().replace('\0', "")).unwrap_or_default();
                *out = Box::into_raw(Box::new(SlReport { study, summary }));
                SlStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// 1 when every check passed, 0 otherwise or for NULL.
///
/// # Safety
/// `h` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sl_report_all_passed(h: *const SlReport) -> i32 {
    h.as_ref().map_or(0, |r| r.study.report.all_passed() as i32)
}

/// # Safety
/// `h` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sl_report_num_checks(h: *const SlReport) -> usize {
    h.as_ref().map_or(0, |r| r.study.report.checks.len())
}

/// Summary text, owned by the handle.
///
/// # Safety
/// `h` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sl_report_summary(h: *const SlReport) -> *const c_char {
    h.as_ref().map_or(ptr::null(), |r| r.summary.as_ptr())
}

/// Writes the study files, report.json, summary.txt and plots under `dir`.
///
/// # Safety
/// `h` must be a live report handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sl_report_write(h: *const SlReport, dir: *const c_char) -> SlStatus {
    guard(|| {
        let Some(r) = h.as_ref() else {
            return fail(SlStatus::NullArgument, "handle is NULL");
        };
        let dir = match read_str(dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match harness::write_study(&r.study, Path::new(dir)) {
            Ok(_) => SlStatus::Ok,
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `h` must be NULL or a report handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_report_free(h: *mut SlReport) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
