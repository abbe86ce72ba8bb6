//! Partial log-likelihood, score and observed information, the Newton MPLE
//! solver, and the classical Fisher/LRT diagnostics.
//!
//! Risk sets are prefixes of the decreasing-time sort, so every sum over
//! `1{Y_j >= Y_i}` is a running prefix aggregate. Exponentials are rescaled
//! by the running maximum of the linear predictor, which leaves all
//! likelihood quantities mathematically unchanged.

use ndarray::{Array1, Array2};

use crate::error::{CoxError, Result};
use crate::model::SortedCohort;
use crate::numeric::linalg::{cholesky_inverse, cholesky_solve};

pub const FIT_DEFAULT_TOL: f64 = 1e-9;
pub const FIT_DEFAULT_MAX_ITER: usize = 100;
/// `|beta| >= DIVERGENCE_FACTOR * sqrt(p)` flags the fit as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta_hat: Array1<f64>,
    pub loglik: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
}

/// Linear predictors in sorted order.
fn sorted_eta(sorted: &SortedCohort, x: &Array2<f64>, beta: &Array1<f64>) -> Vec<f64> {
    sorted
        .order
        .iter()
        .map(|&orig| x.row(orig).dot(beta))
        .collect()
}

/// Partial log-likelihood
/// `L(beta) = (1/n) sum_i Delta_i { eta_i - log((1/n) sum_{j in R_i} e^{eta_j}) }`.
pub fn partial_loglik(sorted: &SortedCohort, x: &Array2<f64>, beta: &Array1<f64>) -> f64 {
    let eta = sorted_eta(sorted, x, beta);
    partial_loglik_eta(sorted, &eta)
}

/// Same likelihood evaluated from precomputed sorted-order predictors.
pub fn partial_loglik_eta(sorted: &SortedCohort, eta: &[f64]) -> f64 {
    let n = sorted.n();
    let ln_n = (n as f64).ln();
    let mut acc = 0.0;
    let mut j = 0usize;
    let mut run_max = f64::NEG_INFINITY;
    let mut run_sum = 0.0_f64; // sum of exp(eta_j - run_max) over the prefix
    for &i in &sorted.uncensored {
        while j <= sorted.rho[i] {
            let e = eta[j];
            if e > run_max {
                if run_max.is_finite() {
                    run_sum *= (run_max - e).exp();
                }
                run_max = e;
            }
            run_sum += (eta[j] - run_max).exp();
            j += 1;
        }
        let log_w = run_max + run_sum.ln();
        acc += eta[i] - (log_w - ln_n);
    }
    acc / n as f64
}

/// Score vector `(1/n) dL/dbeta` and observed information `-(1/n) d2L/dbeta2`.
pub fn score_and_information(
    sorted: &SortedCohort,
    x: &Array2<f64>,
    beta: &Array1<f64>,
) -> (Array1<f64>, Array2<f64>) {
    let n = sorted.n();
    let p = x.ncols();
    let eta = sorted_eta(sorted, x, beta);

    let mut grad = Array1::<f64>::zeros(p);
    let mut info = Array2::<f64>::zeros((p, p));

    // prefix aggregates of w, w*x and w*x*x', rescaled by the running max eta
    let mut run_max = f64::NEG_INFINITY;
    let mut s0 = 0.0_f64;
    let mut s1 = Array1::<f64>::zeros(p);
    let mut s2 = Array2::<f64>::zeros((p, p));
    let mut j = 0usize;

    for &i in &sorted.uncensored {
        while j <= sorted.rho[i] {
            let e = eta[j];
            if e > run_max {
                let f = if run_max.is_finite() {
                    (run_max - e).exp()
                } else {
                    0.0
                };
                s0 *= f;
                s1.mapv_inplace(|v| v * f);
                s2.mapv_inplace(|v| v * f);
                run_max = e;
            }
            let w = (eta[j] - run_max).exp();
            let row = x.row(sorted.order[j]);
            s0 += w;
            for a in 0..p {
                let wa = w * row[a];
                s1[a] += wa;
                for b in a..p {
                    s2[[a, b]] += wa * row[b];
                }
            }
            j += 1;
        }
        let row_i = x.row(sorted.order[i]);
        for a in 0..p {
            let xbar_a = s1[a] / s0;
            grad[a] += row_i[a] - xbar_a;
            for b in a..p {
                info[[a, b]] += s2[[a, b]] / s0 - xbar_a * (s1[b] / s0);
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    grad.mapv_inplace(|v| v * inv_n);
    for a in 0..p {
        for b in a..p {
            let v = info[[a, b]] * inv_n;
            info[[a, b]] = v;
            info[[b, a]] = v;
        }
    }
    (grad, info)
}

/// Maximize the partial likelihood by damped Newton iteration.
///
/// Convergence: `|grad|_inf <= tol`. Divergence (the finite-sample symptom of
/// nonexistence) is flagged, not an error: `|beta| >= 1e3 sqrt(p)`.
pub fn fit_mple(
    sorted: &SortedCohort,
    x: &Array2<f64>,
    init: Option<&Array1<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<FitResult> {
    let p = x.ncols();
    let divergence_threshold = DIVERGENCE_FACTOR * (p as f64).sqrt();
    let mut beta = match init {
        Some(b) => {
            if b.len() != p {
                return Err(CoxError::InvalidArgument(
                    "init length must equal the number of columns".into(),
                ));
            }
            b.clone()
        }
        None => Array1::zeros(p),
    };
    let mut loglik = partial_loglik(sorted, x, &beta);
    let mut iterations = 0;

    while iterations < max_iter {
        let (grad, info) = score_and_information(sorted, x, &beta);
        let grad_norm = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if grad_norm <= tol {
            // a stationary point with singular curvature is a degenerate
            // design (constant or duplicated columns), not a maximum
            cholesky_solve(&info, &grad)?;
            return Ok(FitResult {
                beta_hat: beta,
                loglik,
                grad_norm,
                iterations,
                converged: true,
                diverged: false,
            });
        }
        let dir = cholesky_solve(&info, &grad)?;
        let slope = grad.dot(&dir); // > 0 for an ascent direction
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &beta + &(&dir * step);
            let cand_ll = partial_loglik(sorted, x, &cand);
            if cand_ll.is_finite() && cand_ll >= loglik + 1e-4 * step * slope {
                beta = cand;
                loglik = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no ascent progress possible at this scale; treat as converged
            // to the numerical optimum
            break;
        }
        iterations += 1;
        let norm = beta.dot(&beta).sqrt();
        if norm >= divergence_threshold {
            return Ok(FitResult {
                beta_hat: beta,
                loglik,
                grad_norm,
                iterations,
                converged: false,
                diverged: true,
            });
        }
    }
    let (grad, _) = score_and_information(sorted, x, &beta);
    let grad_norm = grad.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(FitResult {
        beta_hat: beta,
        loglik,
        grad_norm,
        iterations,
        converged: grad_norm <= tol,
        diverged: false,
    })
}

/// Classical per-coordinate standard deviations
/// `sqrt(diag((n * I)^-1))` with `I` the observed information of the
/// 1/n-scaled likelihood, evaluated at `beta`.
pub fn fisher_std(sorted: &SortedCohort, x: &Array2<f64>, beta: &Array1<f64>) -> Result<Vec<f64>> {
    let n = sorted.n() as f64;
    let (_, info) = score_and_information(sorted, x, beta);
    let inv = cholesky_inverse(&info)?;
    Ok((0..x.ncols()).map(|j| (inv[[j, j]] / n).sqrt()).collect())
}

/// Likelihood-ratio statistic `2n (L(full) - L(beta_j = 0))` for coordinate
/// `j` (zero-based). Divergence of either fit propagates.
pub fn lrt_stat(sorted: &SortedCohort, x: &Array2<f64>, j: usize, tol: f64) -> Result<f64> {
    let p = x.ncols();
    if j >= p {
        return Err(CoxError::InvalidArgument(format!(
            "coordinate {j} out of range for p = {p}"
        )));
    }
    let full = fit_mple(sorted, x, None, tol, FIT_DEFAULT_MAX_ITER)?;
    if full.diverged {
        return Err(CoxError::FitDiverged);
    }
    let restricted_ll = if p == 1 {
        // the restricted model is the null model
        partial_loglik(sorted, x, &Array1::zeros(1))
    } else {
        let mut cols: Vec<usize> = (0..p).collect();
        cols.remove(j);
        let mut xr = Array2::<f64>::zeros((x.nrows(), p - 1));
        for (new_c, &old_c) in cols.iter().enumerate() {
            xr.column_mut(new_c).assign(&x.column(old_c));
        }
        let restricted = fit_mple(sorted, &xr, None, tol, FIT_DEFAULT_MAX_ITER)?;
        if restricted.diverged {
            return Err(CoxError::FitDiverged);
        }
        restricted.loglik
    };
    let n = sorted.n() as f64;
    Ok((2.0 * n * (full.loglik - restricted_ll)).max(0.0))
}
