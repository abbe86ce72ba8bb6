//! C ABI for the high-dimensional Cox regression toolkit.
//!
//! All entry points follow the same conventions: opaque handles created and
//! freed through paired functions, scalar results through out-pointers, and
//! a `CoxStatus` code on every call. Panics are caught at the boundary and
//! reported as `COX_STATUS_INTERNAL_ERROR`.

use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use coxht::boundary::estimate_h;
use coxht::error::CoxError;
use coxht::existence::{build_reduced_constraints, lp_max};
use coxht::fit::{fit_mple, FitResult};
use coxht::inference::{corrected_pvalues, wald_chi2};
use coxht::model::{ModelConfig, SortedCohort};
use coxht::numeric::rng::RngStream;
use coxht::state::{solve_state_equations, EnvelopeContext, StateConstants};
use ndarray::Array2;

/// Status code returned by every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoEvents = 3,
    SingularInformation = 4,
    DidNotConverge = 5,
    NumericalFailure = 6,
    InternalError = 7,
}

fn status_of(err: &CoxError) -> CoxStatus {
    match err {
        CoxError::NoEvents => CoxStatus::NoEvents,
        CoxError::SingularInformation => CoxStatus::SingularInformation,
        CoxError::InvalidArgument(_) | CoxError::Config(_) | CoxError::Parse(_) => {
            CoxStatus::InvalidArgument
        }
        CoxError::ProjectionDidNotConverge => CoxStatus::DidNotConverge,
        _ => CoxStatus::NumericalFailure,
    }
}

fn guarded<F: FnOnce() -> CoxStatus>(f: F) -> CoxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => CoxStatus::InternalError,
    }
}

/// Opaque survival dataset: covariates, event times and indicators,
/// pre-sorted for likelihood evaluation.
pub struct CoxDataset {
    sorted: SortedCohort,
    x: Array2<f64>,
}

/// Opaque fit result.
pub struct CoxFit {
    inner: FitResult,
}

/// Scalar outputs of the state-equation solver.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CoxStateResult {
    pub a_star: f64,
    pub b_star: f64,
    pub r_star: f64,
    pub v_star: f64,
    pub saddle_value: f64,
    pub converged: bool,
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn coxht_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a dataset from row-major covariates `x` (n rows, p columns),
/// event times `y` and indicators `delta` (0 censored, 1 event).
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` and `delta` to `n` elements, and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn coxht_dataset_new(
    n: usize,
    p: usize,
    x: *const f64,
    y: *const f64,
    delta: *const u8,
    out: *mut *mut CoxDataset,
) -> CoxStatus {
    if x.is_null() || y.is_null() || delta.is_null() || out.is_null() {
        return CoxStatus::NullPointer;
    }
    if n == 0 || p == 0 {
        return CoxStatus::InvalidArgument;
    }
    guarded(|| {
        let xs = std::slice::from_raw_parts(x, n * p);
        let ys = std::slice::from_raw_parts(y, n);
        let ds = std::slice::from_raw_parts(delta, n);
        let Some(matrix) = Array2::from_shape_vec((n, p), xs.to_vec()).ok() else {
            return CoxStatus::InvalidArgument;
        };
        if ys.iter().any(|v| !v.is_finite()) {
            return CoxStatus::InvalidArgument;
        }
        let flags: Vec<bool> = ds.iter().map(|&d| d != 0).collect();
        let sorted = SortedCohort::from_observed(ys, &flags);
        let handle = Box::new(CoxDataset { sorted, x: matrix });
        *out = Box::into_raw(handle);
        CoxStatus::Ok
    })
}

/// Free a dataset handle. Null is ignored.
///
/// # Safety
/// `ds` must be null or a pointer returned by `coxht_dataset_new`.
#[no_mangle]
pub unsafe extern "C" fn coxht_dataset_free(ds: *mut CoxDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Maximize the partial likelihood. On success `out` owns a new fit handle.
///
/// # Safety
/// `ds` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit(
    ds: *const CoxDataset,
    tol: f64,
    max_iter: usize,
    out: *mut *mut CoxFit,
) -> CoxStatus {
    if ds.is_null() || out.is_null() {
        return CoxStatus::NullPointer;
    }
    guarded(|| {
        let data = &*ds;
        match fit_mple(&data.sorted, &data.x, None, tol, max_iter) {
            Ok(fit) => {
                *out = Box::into_raw(Box::new(CoxFit { inner: fit }));
                CoxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Number of coefficients in a fit.
///
/// # Safety
/// `fit` must be a valid fit handle.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit_dim(fit: *const CoxFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    (*fit).inner.beta_hat.len()
}

/// Copy the fitted coefficients into `buf` (capacity `len`).
///
/// # Safety
/// `fit` must be valid and `buf` must point to at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit_beta(fit: *const CoxFit, buf: *mut f64, len: usize) -> CoxStatus {
    if fit.is_null() || buf.is_null() {
        return CoxStatus::NullPointer;
    }
    let beta = &(*fit).inner.beta_hat;
    if len < beta.len() {
        return CoxStatus::InvalidArgument;
    }
    let out = std::slice::from_raw_parts_mut(buf, beta.len());
    for (o, b) in out.iter_mut().zip(beta.iter()) {
        *o = *b;
    }
    CoxStatus::Ok
}

/// Final log partial likelihood of a fit.
///
/// # Safety
/// `fit` must be a valid fit handle.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit_loglik(fit: *const CoxFit) -> f64 {
    if fit.is_null() {
        return f64::NAN;
    }
    (*fit).inner.loglik
}

/// Whether the Newton iteration converged.
///
/// # Safety
/// `fit` must be a valid fit handle.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit_converged(fit: *const CoxFit) -> bool {
    !fit.is_null() && (*fit).inner.converged
}

/// Whether the iterates diverged (the finite-sample symptom of
/// nonexistence).
///
/// # Safety
/// `fit` must be a valid fit handle.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit_diverged(fit: *const CoxFit) -> bool {
    !fit.is_null() && (*fit).inner.diverged
}

/// Free a fit handle. Null is ignored.
///
/// # Safety
/// `fit` must be null or a pointer returned by `coxht_fit`.
#[no_mangle]
pub unsafe extern "C" fn coxht_fit_free(fit: *mut CoxFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Finite-sample existence verdict: `exists` is nonzero when the reduced
/// constraint LP has optimum at most `tol`; `lp_value` and the constraint
/// row count are reported alongside.
///
/// # Safety
/// `ds` must be valid; out-pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn coxht_exists(
    ds: *const CoxDataset,
    tol: f64,
    exists: *mut i32,
    lp_value: *mut f64,
    rows: *mut usize,
) -> CoxStatus {
    if ds.is_null() || exists.is_null() {
        return CoxStatus::NullPointer;
    }
    guarded(|| {
        let data = &*ds;
        let cm = match build_reduced_constraints(&data.sorted, &data.x) {
            Ok(cm) => cm,
            Err(e) => return status_of(&e),
        };
        match lp_max(&cm) {
            Ok(v) => {
                *exists = i32::from(v <= tol);
                if !lp_value.is_null() {
                    *lp_value = v;
                }
                if !rows.is_null() {
                    *rows = cm.len();
                }
                CoxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Monte Carlo estimate of the existence boundary value at one signal
/// strength, with standard error.
#[no_mangle]
pub extern "C" fn coxht_boundary_point(
    kappa: f64,
    lambda: f64,
    censor_lo: f64,
    censor_hi: f64,
    n: usize,
    reps: usize,
    seed: u64,
    delta_hat: *mut f64,
    stderr: *mut f64,
) -> CoxStatus {
    if delta_hat.is_null() {
        return CoxStatus::NullPointer;
    }
    guarded(|| {
        let mut config = ModelConfig::new(n.max(1), 1, kappa);
        config.baseline_rate = lambda;
        config.censor_lo = censor_lo;
        config.censor_hi = censor_hi;
        if config.validate().is_err() || n == 0 || reps == 0 {
            return CoxStatus::InvalidArgument;
        }
        match estimate_h(&config, n, reps, RngStream::new(seed, 0)) {
            Ok((mean, se)) => {
                unsafe {
                    *delta_hat = mean;
                    if !stderr.is_null() {
                        *stderr = se;
                    }
                }
                CoxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Solve the state equations at (kappa, delta) under a constant baseline
/// hazard and uniform censoring.
#[no_mangle]
pub extern "C" fn coxht_solve_state(
    kappa: f64,
    delta: f64,
    lambda: f64,
    censor_lo: f64,
    censor_hi: f64,
    n_rep: usize,
    seed: u64,
    out: *mut CoxStateResult,
) -> CoxStatus {
    if out.is_null() {
        return CoxStatus::NullPointer;
    }
    guarded(|| {
        if !(delta > 0.0 && delta < 1.0) || n_rep == 0 {
            return CoxStatus::InvalidArgument;
        }
        let mut config = ModelConfig::new(n_rep, 1, kappa);
        config.baseline_rate = lambda;
        config.censor_lo = censor_lo;
        config.censor_hi = censor_hi;
        if config.validate().is_err() {
            return CoxStatus::InvalidArgument;
        }
        let consts = StateConstants::compute(kappa, delta, lambda, censor_lo, censor_hi, 64);
        let ctx = EnvelopeContext::generate(&config, n_rep, RngStream::new(seed, 0));
        match solve_state_equations(&ctx, &consts, None, coxht::state::STATE_DEFAULT_TOL) {
            Ok(sol) => {
                unsafe {
                    *out = CoxStateResult {
                        a_star: sol.a_star,
                        b_star: sol.b_star,
                        r_star: sol.r_star,
                        v_star: sol.v_star,
                        saddle_value: sol.saddle_value,
                        converged: sol.converged,
                    };
                }
                CoxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Two-sided corrected p-value `2 Phi(-|beta_j / b_star|)`.
#[no_mangle]
pub extern "C" fn coxht_corrected_pvalue(beta_j: f64, b_star: f64, out: *mut f64) -> CoxStatus {
    if out.is_null() {
        return CoxStatus::NullPointer;
    }
    match corrected_pvalues(&[beta_j], b_star) {
        Ok(p) => {
            unsafe { *out = p[0] };
            CoxStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Wald chi-square test over `len` null coordinates.
///
/// # Safety
/// `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn coxht_wald_chi2(
    values: *const f64,
    len: usize,
    b_star: f64,
    statistic: *mut f64,
    p_value: *mut f64,
) -> CoxStatus {
    if values.is_null() || statistic.is_null() || p_value.is_null() {
        return CoxStatus::NullPointer;
    }
    let vals = std::slice::from_raw_parts(values, len);
    match wald_chi2(vals, b_star) {
        Ok(rep) => {
            *statistic = rep.statistic;
            *p_value = rep.p_value;
            CoxStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_c_string() {
        let ptr = coxht_version();
        let s = unsafe { std::ffi::CStr::from_ptr(ptr) };
        assert_eq!(s.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
