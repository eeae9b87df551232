//! C ABI over the kolmo toolkit.
//!
//! Conventions:
//! - every constructor returns a status code and writes an opaque handle
//!   through an out-pointer; handles are freed with the matching `_free`;
//! - structured inputs and outputs travel as JSON strings in the same
//!   schemas the CLI uses; returned strings are freed with
//!   [`kolmo_string_free`];
//! - no call panics across the boundary: panics are caught and reported as
//!   `InternalPanic`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DVector;

use kolmo::criterion::CriterionParams;
use kolmo::data::BoundaryData;
use kolmo::domain::{Cylinder, Domain};
use kolmo::error::KolmoError;
use kolmo::kernel::FundamentalSolution;
use kolmo::operator::OuOperator;
use kolmo::solver::{ProbeConfig, SolverConfig};

/// Status of a C API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KolmoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidArgument = 4,
    NumericalFailure = 5,
    AssertionFailure = 6,
    InternalPanic = 7,
}

fn status_of(err: &KolmoError) -> KolmoStatus {
    match err {
        KolmoError::Structural(_) | KolmoError::Config(_) | KolmoError::Io(_) => {
            KolmoStatus::InvalidConfig
        }
        KolmoError::Domain(_) => KolmoStatus::InvalidArgument,
        KolmoError::Numerical(_) => KolmoStatus::NumericalFailure,
        KolmoError::Assertion(_) => KolmoStatus::AssertionFailure,
    }
}

/// Opaque operator handle.
pub struct KolmoOperator(OuOperator);
/// Opaque fundamental-solution handle.
pub struct KolmoSolution(FundamentalSolution);
/// Opaque domain handle.
pub struct KolmoDomain(Domain);

unsafe fn cstr_to_str<'a>(ptr: *const c_char) -> Result<&'a str, KolmoStatus> {
    if ptr.is_null() {
        return Err(KolmoStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| KolmoStatus::InvalidUtf8)
}

fn string_out(s: String, out: *mut *mut c_char) -> KolmoStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            KolmoStatus::Ok
        }
        Err(_) => KolmoStatus::InternalPanic,
    }
}

fn guarded<F: FnOnce() -> KolmoStatus>(f: F) -> KolmoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => KolmoStatus::InternalPanic,
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], KolmoStatus> {
    if ptr.is_null() {
        return Err(KolmoStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn kolmo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Free a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must have been returned by a `kolmo_*` call and not freed before.
#[no_mangle]
pub unsafe extern "C" fn kolmo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build an operator from its JSON config `{"p": [...], "A0": [[..]], "B": [...]}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_operator_from_json(
    json: *const c_char,
    out: *mut *mut KolmoOperator,
) -> KolmoStatus {
    guarded(|| {
        if out.is_null() {
            return KolmoStatus::NullPointer;
        }
        let text = match cstr_to_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match OuOperator::from_json(text) {
            Ok(op) => {
                *out = Box::into_raw(Box::new(KolmoOperator(op)));
                KolmoStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Run all operator invariant checks; writes the JSON validation report.
///
/// # Safety
/// `op` must be a live operator handle; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_operator_validate(
    op: *const KolmoOperator,
    out_json: *mut *mut c_char,
) -> KolmoStatus {
    guarded(|| {
        if op.is_null() || out_json.is_null() {
            return KolmoStatus::NullPointer;
        }
        let report = (*op).0.validate();
        match serde_json::to_string_pretty(&report) {
            Ok(s) => string_out(s, out_json),
            Err(_) => KolmoStatus::InternalPanic,
        }
    })
}

/// Space dimension of the operator.
///
/// # Safety
/// `op` must be a live operator handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_operator_dim(
    op: *const KolmoOperator,
    out: *mut usize,
) -> KolmoStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            return KolmoStatus::NullPointer;
        }
        *out = (*op).0.dim();
        KolmoStatus::Ok
    })
}

/// # Safety
/// `op` must come from `kolmo_operator_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kolmo_operator_free(op: *mut KolmoOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Build the fundamental-solution context for an operator.
///
/// # Safety
/// `op` must be a live operator handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn kolmo_solution_new(
    op: *const KolmoOperator,
    out: *mut *mut KolmoSolution,
) -> KolmoStatus {
    guarded(|| {
        if op.is_null() || out.is_null() {
            return KolmoStatus::NullPointer;
        }
        match FundamentalSolution::new((*op).0.clone()) {
            Ok(fs) => {
                *out = Box::into_raw(Box::new(KolmoSolution(fs)));
                KolmoStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Kernel value at (x, t); zero for t <= 0.
///
/// # Safety
/// `sol` live handle; `x` points to `len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn kolmo_solution_eval(
    sol: *const KolmoSolution,
    x: *const f64,
    len: usize,
    t: f64,
    out: *mut f64,
) -> KolmoStatus {
    guarded(|| {
        if sol.is_null() || out.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(x, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let fs = &(*sol).0;
        if len != fs.operator().dim() {
            return KolmoStatus::InvalidArgument;
        }
        *out = fs.eval(&DVector::from_column_slice(xs), t);
        KolmoStatus::Ok
    })
}

/// Natural log of the kernel; -inf on the vanishing half.
///
/// # Safety
/// As for [`kolmo_solution_eval`].
#[no_mangle]
pub unsafe extern "C" fn kolmo_solution_log_eval(
    sol: *const KolmoSolution,
    x: *const f64,
    len: usize,
    t: f64,
    out: *mut f64,
) -> KolmoStatus {
    guarded(|| {
        if sol.is_null() || out.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(x, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let fs = &(*sol).0;
        if len != fs.operator().dim() {
            return KolmoStatus::InvalidArgument;
        }
        *out = fs.log_eval(&DVector::from_column_slice(xs), t);
        KolmoStatus::Ok
    })
}

/// # Safety
/// `sol` must come from `kolmo_solution_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kolmo_solution_free(sol: *mut KolmoSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Build a domain from the JSON set language (`{"op": "ball", ...}`).
///
/// # Safety
/// `json` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn kolmo_domain_from_json(
    json: *const c_char,
    out: *mut *mut KolmoDomain,
) -> KolmoStatus {
    guarded(|| {
        if out.is_null() {
            return KolmoStatus::NullPointer;
        }
        let text = match cstr_to_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Domain::from_json(text) {
            Ok(d) => {
                *out = Box::into_raw(Box::new(KolmoDomain(d)));
                KolmoStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Membership oracle: writes 1 when x is inside, 0 otherwise.
///
/// # Safety
/// `dom` live handle; `x` points to `len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn kolmo_domain_contains(
    dom: *const KolmoDomain,
    x: *const f64,
    len: usize,
    out: *mut i32,
) -> KolmoStatus {
    guarded(|| {
        if dom.is_null() || out.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(x, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let d = &(*dom).0;
        if len != d.dim() {
            return KolmoStatus::InvalidArgument;
        }
        *out = i32::from(d.contains(xs));
        KolmoStatus::Ok
    })
}

/// # Safety
/// `dom` must come from `kolmo_domain_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kolmo_domain_free(dom: *mut KolmoDomain) {
    if !dom.is_null() {
        drop(Box::from_raw(dom));
    }
}

fn parse_or_default<T: Default + for<'de> serde::Deserialize<'de>>(
    json: Option<&str>,
) -> Result<T, KolmoStatus> {
    match json {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(|_| KolmoStatus::InvalidConfig),
    }
}

unsafe fn optional_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, KolmoStatus> {
    if ptr.is_null() {
        Ok(None)
    } else {
        cstr_to_str(ptr).map(Some)
    }
}

/// Evaluate the series regularity criterion at `x0`; writes the JSON report.
/// `params_json` may be NULL for defaults.
///
/// # Safety
/// Handles live; `x0` points to `len` doubles; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kolmo_criterion_evaluate(
    sol: *const KolmoSolution,
    dom: *const KolmoDomain,
    x0: *const f64,
    len: usize,
    params_json: *const c_char,
    out_json: *mut *mut c_char,
) -> KolmoStatus {
    guarded(|| {
        if sol.is_null() || dom.is_null() || out_json.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(x0, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let params: CriterionParams = match optional_str(params_json).and_then(parse_or_default) {
            Ok(p) => p,
            Err(e) => return e,
        };
        let fs = &(*sol).0;
        let domain = &(*dom).0;
        match kolmo::criterion::evaluate(fs, domain, &DVector::from_column_slice(xs), &params) {
            Ok(report) => match serde_json::to_string_pretty(&report) {
                Ok(s) => string_out(s, out_json),
                Err(_) => KolmoStatus::InternalPanic,
            },
            Err(e) => status_of(&e),
        }
    })
}

/// Solve the stationary Dirichlet problem at `point` with JSON boundary data
/// (`{"kind": "constant", "value": 1.0}` etc.); writes the JSON estimate.
/// `solver_json` may be NULL for defaults.
///
/// # Safety
/// Handles live; `point` points to `len` doubles; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kolmo_solve_stationary(
    sol: *const KolmoSolution,
    dom: *const KolmoDomain,
    data_json: *const c_char,
    point: *const f64,
    len: usize,
    solver_json: *const c_char,
    out_json: *mut *mut c_char,
) -> KolmoStatus {
    guarded(|| {
        if sol.is_null() || dom.is_null() || out_json.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(point, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let data: BoundaryData = match cstr_to_str(data_json)
            .and_then(|t| serde_json::from_str(t).map_err(|_| KolmoStatus::InvalidConfig))
        {
            Ok(d) => d,
            Err(e) => return e,
        };
        if data.eval_space(xs).is_err() {
            return KolmoStatus::InvalidConfig;
        }
        let cfg: SolverConfig = match optional_str(solver_json).and_then(parse_or_default) {
            Ok(c) => c,
            Err(e) => return e,
        };
        let fs = &(*sol).0;
        let domain = &(*dom).0;
        let phi = move |p: &[f64]| data.eval_space(p).unwrap_or(f64::NAN);
        match kolmo::solver::solve_stationary(
            fs,
            domain,
            &phi,
            &DVector::from_column_slice(xs),
            &cfg,
        ) {
            Ok(est) => match serde_json::to_string_pretty(&est) {
                Ok(s) => string_out(s, out_json),
                Err(_) => KolmoStatus::InternalPanic,
            },
            Err(e) => status_of(&e),
        }
    })
}

/// Solve the evolution Dirichlet problem at (`point`, `time`) on the
/// cylinder base x (t0, t1); writes the JSON estimate.
///
/// # Safety
/// As for [`kolmo_solve_stationary`].
#[no_mangle]
pub unsafe extern "C" fn kolmo_solve_evolution(
    sol: *const KolmoSolution,
    dom: *const KolmoDomain,
    t0: f64,
    t1: f64,
    data_json: *const c_char,
    point: *const f64,
    len: usize,
    time: f64,
    solver_json: *const c_char,
    out_json: *mut *mut c_char,
) -> KolmoStatus {
    guarded(|| {
        if sol.is_null() || dom.is_null() || out_json.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(point, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let data: BoundaryData = match cstr_to_str(data_json)
            .and_then(|t| serde_json::from_str(t).map_err(|_| KolmoStatus::InvalidConfig))
        {
            Ok(d) => d,
            Err(e) => return e,
        };
        let cfg: SolverConfig = match optional_str(solver_json).and_then(parse_or_default) {
            Ok(c) => c,
            Err(e) => return e,
        };
        let fs = &(*sol).0;
        let cyl = match Cylinder::new((*dom).0.clone(), t0, t1) {
            Ok(c) => c,
            Err(e) => return status_of(&e),
        };
        let psi = move |p: &[f64], s: f64| data.eval_spacetime(p, s);
        match kolmo::solver::solve_evolution(
            fs,
            &cyl,
            &psi,
            &DVector::from_column_slice(xs),
            time,
            &cfg,
        ) {
            Ok(est) => match serde_json::to_string_pretty(&est) {
                Ok(s) => string_out(s, out_json),
                Err(_) => KolmoStatus::InternalPanic,
            },
            Err(e) => status_of(&e),
        }
    })
}

/// Probe stationary boundary regularity at `x0`; writes the JSON verdict.
/// `solver_json` and `probe_json` may be NULL for defaults.
///
/// # Safety
/// Handles live; `x0` points to `len` doubles; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kolmo_probe_stationary(
    sol: *const KolmoSolution,
    dom: *const KolmoDomain,
    x0: *const f64,
    len: usize,
    solver_json: *const c_char,
    probe_json: *const c_char,
    out_json: *mut *mut c_char,
) -> KolmoStatus {
    guarded(|| {
        if sol.is_null() || dom.is_null() || out_json.is_null() {
            return KolmoStatus::NullPointer;
        }
        let xs = match slice_arg(x0, len) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let cfg: SolverConfig = match optional_str(solver_json).and_then(parse_or_default) {
            Ok(c) => c,
            Err(e) => return e,
        };
        let probe: ProbeConfig = match optional_str(probe_json).and_then(parse_or_default) {
            Ok(c) => c,
            Err(e) => return e,
        };
        let fs = &(*sol).0;
        let domain = &(*dom).0;
        match kolmo::solver::regularity_probe_stationary(
            fs,
            domain,
            &DVector::from_column_slice(xs),
            &cfg,
            &probe,
        ) {
            Ok(v) => match serde_json::to_string_pretty(&v) {
                Ok(s) => string_out(s, out_json),
                Err(_) => KolmoStatus::InternalPanic,
            },
            Err(e) => status_of(&e),
        }
    })
}
