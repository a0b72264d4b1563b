//! C ABI over `sps-core`.
//!
//! Problems, approximations and reference solutions are opaque handles created
//! by `*_new`/`*_from_json` functions and released by the matching `*_free`.
//! Every fallible call returns an [`SpsStatus`]; the message of the most recent
//! failure on the calling thread is available from [`sps_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sps_core::approx::Approximation;
use sps_core::problem::{eta_derivatives, load_problem, ProblemDoc, ReducedPath};
use sps_core::quadratic::QuadraticInstance;
use sps_core::solver::{solve_bvp3, DiscreteSolution};
use sps_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed JSON, a bad expression or a problem that fails validation.
    InvalidInput = 3,
    /// The numerics failed: no reduced solution, Newton divergence.
    NumericFailure = 4,
    /// An output buffer is shorter than the result.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// A validated problem together with its reduced solution.
pub struct SpsProblem {
    path: ReducedPath,
}

/// The composite approximation of a problem at one `eps`.
pub struct SpsApproximation {
    inner: Approximation,
}

/// A reference solution on a layer-adapted mesh.
pub struct SpsSolution {
    inner: DiscreteSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg).unwrap_or_else(|e| {
        let mut bytes = e.into_vec();
        bytes.retain(|&b| b != 0);
        CString::new(bytes).expect("nul bytes removed")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn fail(status: SpsStatus, msg: impl Into<String>) -> SpsStatus {
    set_last_error(msg.into());
    status
}

fn from_core(e: Error) -> SpsStatus {
    let status = if e.is_input_error() { SpsStatus::InvalidInput } else { SpsStatus::NumericFailure };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SpsStatus) -> SpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SpsStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SpsStatus> {
    if s.is_null() {
        return Err(fail(SpsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(SpsStatus::InvalidUtf8, e.to_string()))
}

unsafe fn parse_doc(json: *const c_char) -> Result<ProblemDoc, SpsStatus> {
    let text = read_str(json)?;
    serde_json::from_str(text).map_err(|e| fail(SpsStatus::InvalidInput, format!("problem JSON: {e}")))
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            return fail(SpsStatus::NullPointer, "null pointer argument");
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a JSON problem document and resolves its reduced
/// solution.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sps_problem_from_json(json: *const c_char, out: *mut *mut SpsProblem) -> SpsStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let doc = match parse_doc(json) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let path = match load_problem(&doc).and_then(|p| eta_derivatives(&p)) {
            Ok(p) => p,
            Err(e) => return from_core(e),
        };
        *out = Box::into_raw(Box::new(SpsProblem { path }));
        SpsStatus::Ok
    })
}

/// # Safety
/// `problem` must be NULL or a handle from [`sps_problem_from_json`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn sps_problem_free(problem: *mut SpsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Writes `a`, `gamma`, `b`, the margin `m = -k - lambda` and the problem's
/// default `eps`.
///
/// # Safety
/// `problem` must be a live handle; every output pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn sps_problem_parameters(
    problem: *const SpsProblem,
    a: *mut f64,
    gamma: *mut f64,
    b: *mut f64,
    m: *mut f64,
    eps: *mut f64,
) -> SpsStatus {
    guard(|| {
        non_null!(problem, a, gamma, b, m, eps);
        let p = (*problem).path.problem();
        (*a, *gamma, *b) = p.geometry();
        *m = p.m();
        *eps = p.epsilon;
        SpsStatus::Ok
    })
}

/// Builds the composite approximation at `eps > 0`.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sps_approximation_new(
    problem: *const SpsProblem,
    eps: f64,
    out: *mut *mut SpsApproximation,
) -> SpsStatus {
    guard(|| {
        non_null!(problem, out);
        *out = ptr::null_mut();
        if !(eps.is_finite() && eps > 0.0) {
            return fail(SpsStatus::InvalidInput, format!("eps must be positive, got {eps}"));
        }
        match Approximation::new(&(*problem).path, eps) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpsApproximation { inner }));
                SpsStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `approx` must be NULL or a live handle from [`sps_approximation_new`].
#[no_mangle]
pub unsafe extern "C" fn sps_approximation_free(approx: *mut SpsApproximation) {
    if !approx.is_null() {
        drop(Box::from_raw(approx));
    }
}

/// Sign case `1..=4` of the boundary jumps.
///
/// # Safety
/// `approx` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sps_approximation_case(approx: *const SpsApproximation) -> u8 {
    if approx.is_null() {
        return 0;
    }
    (*approx).inner.case.id()
}

/// Evaluates `y~` (and `w~ = y~'` when `w` is not NULL) at `n` points.
///
/// # Safety
/// `t` and `y` (and `w` when given) must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sps_approximation_eval(
    approx: *const SpsApproximation,
    t: *const f64,
    n: usize,
    y: *mut f64,
    w: *mut f64,
) -> SpsStatus {
    guard(|| {
        non_null!(approx, t, y);
        let ap = &(*approx).inner;
        let ts = std::slice::from_raw_parts(t, n);
        for (i, &ti) in ts.iter().enumerate() {
            match ap.y_tilde(ti) {
                Ok(v) => *y.add(i) = v,
                Err(e) => return from_core(e),
            }
            if !w.is_null() {
                match ap.w_tilde(ti) {
                    Ok(v) => *w.add(i) = v,
                    Err(e) => return from_core(e),
                }
            }
        }
        SpsStatus::Ok
    })
}

/// Bounds `lo <= y~ - y <= hi` at `n` points.
///
/// # Safety
/// `t`, `lo` and `hi` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sps_approximation_envelope(
    approx: *const SpsApproximation,
    t: *const f64,
    n: usize,
    lo: *mut f64,
    hi: *mut f64,
) -> SpsStatus {
    guard(|| {
        non_null!(approx, t, lo, hi);
        let ap = &(*approx).inner;
        for (i, &ti) in std::slice::from_raw_parts(t, n).iter().enumerate() {
            (*lo.add(i), *hi.add(i)) = ap.envelope(ti);
        }
        SpsStatus::Ok
    })
}

/// Solves the problem at `eps` on a mesh of `cells` intervals (a multiple of
/// 4, at least 64).
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sps_solve(
    problem: *const SpsProblem,
    eps: f64,
    cells: usize,
    out: *mut *mut SpsSolution,
) -> SpsStatus {
    guard(|| {
        non_null!(problem, out);
        *out = ptr::null_mut();
        let result = (*problem).path.problem().with_epsilon(eps).and_then(|p| solve_bvp3(&p, cells));
        match result {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SpsSolution { inner }));
                SpsStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `solution` must be NULL or a live handle from [`sps_solve`].
#[no_mangle]
pub unsafe extern "C" fn sps_solution_free(solution: *mut SpsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of mesh nodes, `cells + 1`.
///
/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sps_solution_len(solution: *const SpsSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (*solution).inner.y.len()
}

/// Newton iterations taken.
///
/// # Safety
/// `solution` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sps_solution_newton_iterations(solution: *const SpsSolution) -> usize {
    if solution.is_null() {
        return 0;
    }
    (*solution).inner.newton_iters
}

/// Copies nodes, values and derivative estimates into buffers of `capacity`
/// doubles each.
///
/// # Safety
/// `t`, `y` and `w` must each hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn sps_solution_copy(
    solution: *const SpsSolution,
    t: *mut f64,
    y: *mut f64,
    w: *mut f64,
    capacity: usize,
) -> SpsStatus {
    guard(|| {
        non_null!(solution, t, y, w);
        let sol = &(*solution).inner;
        let n = sol.y.len();
        if capacity < n {
            return fail(SpsStatus::BufferTooSmall, format!("need {n} doubles, got {capacity}"));
        }
        ptr::copy_nonoverlapping(sol.mesh.nodes.as_ptr(), t, n);
        ptr::copy_nonoverlapping(sol.y.as_ptr(), y, n);
        ptr::copy_nonoverlapping(sol.w.as_ptr(), w, n);
        SpsStatus::Ok
    })
}

/// Feasible `lambda` interval for a problem with `f = y^2 + u`. `found` is
/// false when no `lambda` satisfies every condition.
///
/// # Safety
/// `json` must be a NUL-terminated string; the output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn sps_quadratic_lambda_interval(
    json: *const c_char,
    lo: *mut f64,
    hi: *mut f64,
    found: *mut bool,
) -> SpsStatus {
    guard(|| {
        non_null!(lo, hi, found);
        let doc = match parse_doc(json) {
            Ok(d) => d,
            Err(s) => return s,
        };
        match QuadraticInstance::from_doc(&doc).and_then(|q| q.lambda_interval()) {
            Ok(Some((l, h))) => {
                (*lo, *hi, *found) = (l, h, true);
                SpsStatus::Ok
            }
            Ok(None) => {
                (*lo, *hi, *found) = (f64::NAN, f64::NAN, false);
                SpsStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}
