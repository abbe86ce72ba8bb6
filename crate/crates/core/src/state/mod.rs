//! The scalar saddle problem whose solution (a*, b*, r*) governs the
//! asymptotic bias factor, null-coordinate spread and dual radius of the
//! high-dimensional MPLE, together with the supporting quadrature and
//! scalar-equation utilities.

pub mod prox;

use serde::Serialize;

use crate::error::{CoxError, Result};
use crate::numeric::quadrature::{gauss_hermite, gauss_legendre};
use crate::numeric::roots::{golden_section_extremum, solve_scalar_root, Sense};
use crate::numeric::neldermead::nelder_mead_min;
pub use prox::{moreau_envelope, prox_gn, EnvelopeContext, ProxResult};

pub const STATE_DEFAULT_TOL: f64 = 1e-5;
pub const STATE_RESIDUAL_TOL: f64 = 1e-3;
pub const STATE_DEFAULT_NREP: usize = 2000;
const INNER_SCAN_POINTS: usize = 16;
const INNER_GOLDEN_TOL: f64 = 1e-7;

/// Censoring-averaged survival moments: `s0 = E[S(C | kZ)]`,
/// `s1 = E[S(C | kZ) Z]`, with `S(x | kz) = exp(-exp(kz) * lambda * x)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StateConstants {
    pub s0: f64,
    pub s1: f64,
    pub kappa: f64,
    pub delta: f64,
}

/// Tensor Gauss-Hermite x Gauss-Legendre quadrature for (s0, s1) at a fixed
/// node count. Symmetric Hermite pairs are summed adjacently, so s1 vanishes
/// exactly at kappa = 0.
fn censoring_moments_at(
    kappa: f64,
    lambda: f64,
    censor_lo: f64,
    censor_hi: f64,
    nodes: usize,
) -> (f64, f64) {
    let (zx, zw) = gauss_hermite(nodes);
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();

    // inner integral over the censoring support for a fixed z
    let c_mean = |z: f64| -> f64 {
        let rate = lambda * (kappa * z).exp();
        if censor_hi == censor_lo {
            (-rate * censor_lo).exp()
        } else {
            let (cx, cw) = gauss_legendre(nodes.max(16));
            let half = 0.5 * (censor_hi - censor_lo);
            let mid = 0.5 * (censor_hi + censor_lo);
            let integral: f64 = cx
                .iter()
                .zip(&cw)
                .map(|(x, w)| w * (-rate * (mid + half * x)).exp())
                .sum();
            // divide by the support width: expectation under U[lo, hi]
            integral * half / (censor_hi - censor_lo)
        }
    };

    let m = nodes / 2;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for i in 0..m {
        let x = zx[nodes - 1 - i];
        let z = std::f64::consts::SQRT_2 * x;
        let w = zw[i];
        let fp = c_mean(z);
        let fm = c_mean(-z);
        s0 += w * (fp + fm);
        s1 += w * z * (fp - fm);
    }
    if nodes % 2 == 1 {
        s0 += zw[m] * c_mean(0.0);
    }
    (inv_sqrt_pi * s0, inv_sqrt_pi * s1)
}

/// Compute (s0, s1) with a node-doubling accuracy check: the node count is
/// doubled (up to 512) until successive values agree to 1e-8.
pub fn censoring_expectations(
    kappa: f64,
    lambda: f64,
    censor_lo: f64,
    censor_hi: f64,
    nodes: usize,
) -> (f64, f64) {
    assert!(nodes >= 16, "need at least 16 quadrature nodes");
    let mut n = nodes;
    let (mut s0, mut s1) = censoring_moments_at(kappa, lambda, censor_lo, censor_hi, n);
    while n < 512 {
        let (t0, t1) = censoring_moments_at(kappa, lambda, censor_lo, censor_hi, 2 * n);
        let stable = (t0 - s0).abs() <= 1e-8 && (t1 - s1).abs() <= 1e-8;
        s0 = t0;
        s1 = t1;
        n *= 2;
        if stable {
            break;
        }
    }
    (s0, s1)
}

impl StateConstants {
    pub fn compute(
        kappa: f64,
        delta: f64,
        lambda: f64,
        censor_lo: f64,
        censor_hi: f64,
        nodes: usize,
    ) -> Self {
        let (s0, s1) = censoring_expectations(kappa, lambda, censor_lo, censor_hi, nodes);
        Self {
            s0,
            s1,
            kappa,
            delta,
        }
    }
}

/// Solve `b3 (log u - b1) = -b2 u` for `u > 0`; monotone case `b3 > 0`,
/// `b2 >= 0`.
pub fn k_solve(b1: f64, b2: f64, b3: f64) -> Result<f64> {
    if b3 <= 0.0 || b2 < 0.0 {
        return Err(CoxError::NoPositiveRoot(format!(
            "k_solve requires b3 > 0 and b2 >= 0, got b2 = {b2}, b3 = {b3}"
        )));
    }
    if b2 == 0.0 {
        return Ok(b1.exp());
    }
    let f = |u: f64| b3 * (u.ln() - b1) + b2 * u;
    let hi = b1.exp();
    if !hi.is_finite() {
        return Err(CoxError::NoPositiveRoot(
            "exp(b1) overflows double precision".into(),
        ));
    }
    let mut lo = hi;
    for _ in 0..2000 {
        lo *= 0.5;
        if f(lo) <= 0.0 {
            break;
        }
    }
    let mut u = solve_scalar_root(f, lo, hi, 1e-13 * hi.max(1.0))?;
    // Newton polish to push the residual to ~1e-12
    for _ in 0..50 {
        let fu = f(u);
        if fu.abs() <= 1e-12 {
            break;
        }
        let fp = b3 / u + b2;
        u -= fu / fp;
    }
    Ok(u)
}

/// Scalar saddle objective
/// `F(a,b,r) = (1/n) M(xi; b sqrt(d)/r) - (b sqrt(d)/(2r)) (1 - s0)
///             + kappa a s1 - r sqrt(d) b / 2`
/// with `xi = kappa a q + b h + (sqrt(d) b / r) Delta` on the context's
/// realization.
pub fn saddle_objective(
    ctx: &EnvelopeContext,
    consts: &StateConstants,
    a: f64,
    b: f64,
    r: f64,
) -> Result<f64> {
    if !(b > 0.0 && r > 0.0) {
        return Err(CoxError::InvalidArgument(
            "saddle objective requires b > 0 and r > 0".into(),
        ));
    }
    let n = ctx.n();
    let sd = consts.delta.sqrt();
    let kappa = consts.kappa;
    let shift = sd * b / r;
    let sorted = &ctx.reduced.sorted;
    let mut xi = Vec::with_capacity(n);
    for i in 0..n {
        let d = if sorted.delta[i] { 1.0 } else { 0.0 };
        xi.push(kappa * a * ctx.reduced.q1[i] + b * ctx.h[i] + shift * d);
    }
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(CoxError::NonFiniteObjective { a, b, r });
    }
    let inv_c = sd * b / r;
    let envelope = moreau_envelope(ctx, &xi, inv_c)?;
    let value = envelope / n as f64 - (sd * b / (2.0 * r)) * (1.0 - consts.s0)
        + kappa * a * consts.s1
        - r * sd * b / 2.0;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CoxError::NonFiniteObjective { a, b, r })
    }
}

/// Solution of the three stationarity conditions, via the empirical min-max
/// scheme: inner maximization over r, outer minimization over (a, log b).
#[derive(Debug, Clone, Serialize)]
pub struct StateSolution {
    pub a_star: f64,
    pub b_star: f64,
    pub r_star: f64,
    /// 1 / (b* sqrt(delta)), so v* b* sqrt(delta) = 1 identically.
    pub v_star: f64,
    pub saddle_value: f64,
    /// Finite-difference stationarity residuals in (a, b, r).
    pub residuals: [f64; 3],
    pub converged: bool,
}

/// Maximize F over r > 0 for fixed (a, b): coarse 16-point scan on log r,
/// then golden-section refinement; the window recenters if the best point
/// lands on an edge.
fn inner_max_r(
    ctx: &EnvelopeContext,
    consts: &StateConstants,
    a: f64,
    b: f64,
    r_center: f64,
) -> Result<(f64, f64)> {
    let eval = |lr: f64| -> f64 {
        saddle_objective(ctx, consts, a, b, lr.exp()).unwrap_or(f64::NEG_INFINITY)
    };
    let mut center = r_center.ln();
    let half_width = 5.0_f64;
    for _expansion in 0..4 {
        let lo = center - half_width;
        let hi = center + half_width;
        let step = (hi - lo) / (INNER_SCAN_POINTS as f64 - 1.0);
        let mut best_i = 0;
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..INNER_SCAN_POINTS {
            let v = eval(lo + step * i as f64);
            if v > best_v {
                best_v = v;
                best_i = i;
            }
        }
        if best_v == f64::NEG_INFINITY {
            return Err(CoxError::NonFiniteObjective { a, b, r: r_center });
        }
        if best_i == 0 {
            center -= half_width;
            continue;
        }
        if best_i == INNER_SCAN_POINTS - 1 {
            center += half_width;
            continue;
        }
        let bracket_lo = lo + step * (best_i as f64 - 1.0);
        let bracket_hi = lo + step * (best_i as f64 + 1.0);
        let (lr_star, val) =
            golden_section_extremum(eval, bracket_lo, bracket_hi, INNER_GOLDEN_TOL, Sense::Max);
        return Ok((lr_star.exp(), val));
    }
    Err(CoxError::NonFiniteObjective { a, b, r: r_center })
}

fn finite_difference_residuals(
    ctx: &EnvelopeContext,
    consts: &StateConstants,
    a: f64,
    b: f64,
    r: f64,
) -> Result<[f64; 3]> {
    let f = |aa: f64, bb: f64, rr: f64| saddle_objective(ctx, consts, aa, bb, rr);
    let ha = 1e-4 * a.abs().max(1.0);
    let hb = 1e-4 * b;
    let hr = 1e-4 * r;
    let da = (f(a + ha, b, r)? - f(a - ha, b, r)?) / (2.0 * ha);
    let db = (f(a, b + hb, r)? - f(a, b - hb, r)?) / (2.0 * hb);
    let dr = (f(a, b, r + hr)? - f(a, b, r - hr)?) / (2.0 * hr);
    Ok([da, db, dr])
}

/// Solve the empirical min-max problem for (a*, b*, r*).
///
/// Multi-start: on non-convergence the solver retries from perturbed
/// initializations before reporting its best iterate with
/// `converged = false`.
pub fn solve_state_equations(
    ctx: &EnvelopeContext,
    consts: &StateConstants,
    init: Option<(f64, f64, f64)>,
    tol: f64,
) -> Result<StateSolution> {
    let (a0, b0, r0) = init.unwrap_or((1.0, 1.0, 1.0));
    if !(b0 > 0.0 && r0 > 0.0) {
        return Err(CoxError::InvalidArgument(
            "initial b and r must be positive".into(),
        ));
    }
    let starts = [
        (a0, b0, r0),
        (a0 + 0.3, 1.5 * b0, r0),
        ((a0 - 0.3).max(0.1), 0.6 * b0, 1.4 * r0),
        (1.0, 0.4, 0.6),
    ];
    let mut best: Option<StateSolution> = None;
    for &(sa, sb, sr) in &starts {
        match solve_from(ctx, consts, sa, sb, sr, tol) {
            Ok(sol) => {
                if sol.converged {
                    return Ok(sol);
                }
                let better = match &best {
                    None => true,
                    Some(cur) => sol.saddle_value < cur.saddle_value,
                };
                if better {
                    best = Some(sol);
                }
            }
            Err(_) => continue,
        }
    }
    best.ok_or(CoxError::NonFiniteObjective {
        a: a0,
        b: b0,
        r: r0,
    })
}

fn solve_from(
    ctx: &EnvelopeContext,
    consts: &StateConstants,
    a0: f64,
    b0: f64,
    r0: f64,
    tol: f64,
) -> Result<StateSolution> {
    // the inner maximizer is warm-started across outer probes
    let r_seed = std::cell::Cell::new(r0);
    let outer = |x: &[f64]| -> f64 {
        let a = x[0];
        let b = x[1].exp();
        match inner_max_r(ctx, consts, a, b, r_seed.get()) {
            Ok((r, v)) => {
                r_seed.set(r);
                v
            }
            Err(_) => f64::NAN,
        }
    };
    let nm = nelder_mead_min(outer, &[a0, b0.ln()], 0.25, tol, 400)?;
    let a = nm.x[0];
    let b = nm.x[1].exp();
    let (r, value) = inner_max_r(ctx, consts, a, b, r_seed.get())?;
    let residuals = finite_difference_residuals(ctx, consts, a, b, r)?;
    let max_resid = residuals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let sd = consts.delta.sqrt();
    Ok(StateSolution {
        a_star: a,
        b_star: b,
        r_star: r,
        v_star: 1.0 / (b * sd),
        saddle_value: value,
        residuals,
        converged: nm.converged && max_resid <= STATE_RESIDUAL_TOL,
    })
}

/// Asymptotic error formulas:
/// relative squared error `(a*-1)^2 + (b*)^2 / kappa^2` and projected
/// squared error `(b*)^2`.
pub fn theoretical_errors(solution: &StateSolution, kappa: f64) -> Result<(f64, f64)> {
    if kappa <= 0.0 {
        return Err(CoxError::InvalidArgument(
            "relative error needs kappa > 0".into(),
        ));
    }
    let a = solution.a_star;
    let b = solution.b_star;
    Ok((
        (a - 1.0) * (a - 1.0) + b * b / (kappa * kappa),
        b * b,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, ReducedCohort, SortedCohort};
    use crate::numeric::rng::RngStream;

    #[test]
    fn censoring_closed_form_at_kappa_zero() {
        // kappa=0, lambda=1, C ~ U[1,2]: s0 = e^-1 - e^-2
        let (s0, s1) = censoring_expectations(0.0, 1.0, 1.0, 2.0, 32);
        let want = (-1.0_f64).exp() - (-2.0_f64).exp();
        assert!((s0 - want).abs() < 1e-8, "{s0} vs {want}");
        assert_eq!(s1, 0.0);
    }

    #[test]
    fn censoring_s1_negative_for_positive_kappa() {
        let (s0, s1) = censoring_expectations(1.0, 1.0, 1.0, 2.0, 48);
        assert!(s0 > 0.0 && s0 < 1.0);
        assert!(s1 < 0.0, "{s1}");
    }

    #[test]
    fn censoring_node_doubling_stable() {
        let (a0, a1) = censoring_expectations(2.0, 1.0, 1.0, 8.0, 32);
        let (b0, b1) = censoring_expectations(2.0, 1.0, 1.0, 8.0, 64);
        assert!((a0 - b0).abs() < 1e-8);
        assert!((a1 - b1).abs() < 1e-8);
    }

    #[test]
    fn censoring_point_mass_support() {
        let (s0, _) = censoring_expectations(0.0, 1.0, 1.5, 1.5, 32);
        assert!((s0 - (-1.5_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn k_solve_cases() {
        assert!((k_solve(0.0, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((k_solve(0.7, 0.0, 2.0).unwrap() - 0.7_f64.exp()).abs() < 1e-13);
        // log u = -u: the omega constant
        let u = k_solve(0.0, 1.0, 1.0).unwrap();
        assert!((u - 0.567_143_290_409_783_8).abs() < 1e-6);
        // residual check
        for &(b1, b2, b3) in &[(0.3, 0.5, 1.2), (-1.0, 2.0, 0.7), (2.0, 0.1, 3.0)] {
            let u = k_solve(b1, b2, b3).unwrap();
            let resid = b3 * (u.ln() - b1) + b2 * u;
            assert!(resid.abs() <= 1e-10, "resid {resid}");
        }
        assert!(k_solve(0.0, -1.0, 1.0).is_err());
        assert!(k_solve(0.0, 1.0, 0.0).is_err());
    }

    fn ctx_from(y: &[f64], d: &[bool], q: &[f64], h: &[f64]) -> EnvelopeContext {
        let sorted = SortedCohort::from_observed(y, d);
        let q1: Vec<f64> = sorted.order.iter().map(|&i| q[i]).collect();
        EnvelopeContext {
            reduced: ReducedCohort {
                sorted,
                q1,
                kappa: 1.0,
            },
            h: h.to_vec(),
        }
    }

    #[test]
    fn saddle_objective_deterministic() {
        let cfg = ModelConfig::new(1, 1, 1.0);
        let ctx = EnvelopeContext::generate(&cfg, 50, RngStream::new(61, 0));
        let consts = StateConstants::compute(1.0, 0.2, 1.0, 1.0, 2.0, 32);
        let v1 = saddle_objective(&ctx, &consts, 1.1, 0.8, 0.9).unwrap();
        let v2 = saddle_objective(&ctx, &consts, 1.1, 0.8, 0.9).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn saddle_objective_no_events_closed_form() {
        // Delta = 0 everywhere: the envelope vanishes, leaving the linear terms
        let q = [0.3, -0.5, 0.8, 0.1];
        let h = [0.2, 1.0, -0.7, 0.4];
        let ctx = ctx_from(&[4.0, 3.0, 2.0, 1.0], &[false; 4], &q, &h);
        let consts = StateConstants {
            s0: 0.4,
            s1: -0.1,
            kappa: 1.5,
            delta: 0.25,
        };
        let (a, b, r) = (1.2, 0.7, 0.9);
        let sd = consts.delta.sqrt();
        let want = -(b * sd / (2.0 * r)) * (1.0 - consts.s0) + consts.kappa * a * consts.s1
            - r * sd * b / 2.0;
        let got = saddle_objective(&ctx, &consts, a, b, r).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn saddle_objective_term_by_term_oracle() {
        // reassemble every term independently on a small context
        let cfg = ModelConfig::new(1, 1, 1.0);
        let ctx = EnvelopeContext::generate(&cfg, 6, RngStream::new(62, 0));
        let consts = StateConstants::compute(1.0, 0.3, 1.0, 1.0, 2.0, 32);
        let (a, b, r) = (0.9, 1.1, 0.8);
        let got = saddle_objective(&ctx, &consts, a, b, r).unwrap();

        let n = ctx.n();
        let sd = consts.delta.sqrt();
        let xi: Vec<f64> = (0..n)
            .map(|i| {
                consts.kappa * a * ctx.reduced.q1[i]
                    + b * ctx.h[i]
                    + sd * b / r * (ctx.reduced.sorted.delta[i] as u8 as f64)
            })
            .collect();
        // envelope recomputed with a naive double-loop G and the prox point
        let c = r / (sd * b);
        let u = prox_gn(&ctx, &xi, c, 1e-12, 5000).unwrap().u;
        let mut g = 0.0;
        for &i in &ctx.reduced.sorted.uncensored {
            let mut w = 0.0;
            for j in 0..n {
                if ctx.reduced.sorted.y[j] >= ctx.reduced.sorted.y[i] {
                    w += u[j].exp();
                }
            }
            g += (w / n as f64).ln();
        }
        let quad: f64 = u.iter().zip(&xi).map(|(a, b)| (a - b) * (a - b)).sum();
        let envelope = g + c / 2.0 * quad;
        let want = envelope / n as f64 - (sd * b / (2.0 * r)) * (1.0 - consts.s0)
            + consts.kappa * a * consts.s1
            - r * sd * b / 2.0;
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn theoretical_error_formulas() {
        let sol = StateSolution {
            a_star: 2.0,
            b_star: 1.0,
            r_star: 1.0,
            v_star: 1.0,
            saddle_value: 0.0,
            residuals: [0.0; 3],
            converged: true,
        };
        let (rel, proj) = theoretical_errors(&sol, 1.0).unwrap();
        assert_eq!(rel, 2.0);
        assert_eq!(proj, 1.0);
        let sol2 = StateSolution {
            a_star: 1.0,
            b_star: 0.0,
            ..sol
        };
        let (rel2, proj2) = theoretical_errors(&sol2, 2.0).unwrap();
        assert_eq!(rel2, 0.0);
        assert_eq!(proj2, 0.0);
        assert!(theoretical_errors(&sol2, 0.0).is_err());
    }
}
