//! Proximal operator and Moreau envelope of the risk-set log-partition
//! function
//! `G(u) = sum_i Delta_i log((1/n) sum_{j in R_i} exp(u_j))`.
//!
//! Gradients cost O(n): risk sets are prefixes of the sorted order, so the
//! per-event log-partition values come from one forward streaming
//! log-sum-exp pass, and the per-coordinate gradient weights from one
//! backward suffix pass over events.

use crate::error::Result;
use crate::model::ReducedCohort;
use crate::numeric::rng::{normal_sample, RngStream};

pub const PROX_DEFAULT_TOL: f64 = 1e-8;
pub const PROX_DEFAULT_MAX_ITER: usize = 2000;

/// One representative realization used by the scalar saddle problem: a
/// sorted reduced cohort and an independent standard normal vector.
#[derive(Debug, Clone)]
pub struct EnvelopeContext {
    pub reduced: ReducedCohort,
    pub h: Vec<f64>,
}

impl EnvelopeContext {
    /// Draws the cohort and `h` from separate purposes of one replication
    /// stream, so they are independent.
    pub fn generate(config: &crate::model::ModelConfig, n_rep: usize, stream: RngStream) -> Self {
        let cohort_stream =
            RngStream::for_replication(stream.base_seed, stream.stream_index, 8);
        let h_stream = RngStream::for_replication(stream.base_seed, stream.stream_index, 9);
        let reduced = crate::model::reduce_to_1d(config, n_rep, cohort_stream);
        let h = normal_sample(h_stream, n_rep);
        Self { reduced, h }
    }

    pub fn n(&self) -> usize {
        self.reduced.n()
    }
}

/// Per-event log-partition values `log sum_{j <= rho(i)} exp(u_j)` via a
/// streaming max-rescaled prefix pass.
fn event_log_partitions(ctx: &EnvelopeContext, u: &[f64]) -> Vec<f64> {
    let sorted = &ctx.reduced.sorted;
    let mut out = Vec::with_capacity(sorted.uncensored.len());
    let mut j = 0usize;
    let mut run_max = f64::NEG_INFINITY;
    let mut run_sum = 0.0_f64;
    for &i in &sorted.uncensored {
        while j <= sorted.rho[i] {
            let e = u[j];
            if e > run_max {
                if run_max.is_finite() {
                    run_sum *= (run_max - e).exp();
                }
                run_max = e;
            }
            run_sum += (u[j] - run_max).exp();
            j += 1;
        }
        out.push(run_max + run_sum.ln());
    }
    out
}

/// `G(u)`, with the 1/n normalization inside each log.
pub fn g_value(ctx: &EnvelopeContext, u: &[f64]) -> f64 {
    let n = ctx.n() as f64;
    let lw = event_log_partitions(ctx, u);
    lw.iter().map(|v| v - n.ln()).sum()
}

/// Gradient of `G`. `grad_j = exp(u_j) * sum_{events i with rho(i) >= j} 1/W_i`,
/// evaluated as `exp(u_j + logsumexp_{i in suffix}(-log W_i))` so every term
/// stays in [0, 1].
pub fn g_gradient(ctx: &EnvelopeContext, u: &[f64]) -> Vec<f64> {
    let sorted = &ctx.reduced.sorted;
    let n = ctx.n();
    let events = &sorted.uncensored;
    let lw = event_log_partitions(ctx, u);
    let k = events.len();

    // suffix log-sum-exp over events of -log W_i
    let mut suffix = vec![f64::NEG_INFINITY; k + 1];
    let mut run_max = f64::NEG_INFINITY;
    let mut run_sum = 0.0_f64;
    for e in (0..k).rev() {
        let v = -lw[e];
        if v > run_max {
            if run_max.is_finite() {
                run_sum *= (run_max - v).exp();
            }
            run_max = v;
        }
        run_sum += (v - run_max).exp();
        suffix[e] = run_max + run_sum.ln();
    }

    // first event (by list position) whose risk set covers coordinate j;
    // rho over events is nondecreasing, so a single pointer suffices
    let mut grad = vec![0.0; n];
    let mut e = 0usize;
    for j in 0..n {
        while e < k && sorted.rho[events[e]] < j {
            e += 1;
        }
        if e == k {
            break;
        }
        grad[j] = (u[j] + suffix[e]).exp();
    }
    grad
}

#[derive(Debug, Clone)]
pub struct ProxResult {
    pub u: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Proximal operator: minimize `Psi(u) = G(u) + (c/2) |u - xi|^2` by L-BFGS
/// with backtracking. Exit when `|grad Psi| <= tol * max(1, |xi|)`; the
/// iteration cap returns the best iterate flagged unconverged.
pub fn prox_gn(
    ctx: &EnvelopeContext,
    xi: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ProxResult> {
    assert!(c > 0.0, "prox weight must be positive");
    let n = ctx.n();
    assert_eq!(xi.len(), n);
    let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let gtol = tol * xi_norm.max(1.0);

    let psi = |u: &[f64]| -> f64 {
        let quad: f64 = u
            .iter()
            .zip(xi)
            .map(|(ui, xii)| (ui - xii) * (ui - xii))
            .sum();
        g_value(ctx, u) + 0.5 * c * quad
    };
    let psi_grad = |u: &[f64]| -> Vec<f64> {
        let mut g = g_gradient(ctx, u);
        for j in 0..n {
            g[j] += c * (u[j] - xi[j]);
        }
        g
    };

    let mut u = xi.to_vec();
    let mut f = psi(&u);
    let mut g = psi_grad(&u);
    let mut g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();

    const MEM: usize = 10;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();

    let mut iterations = 0;
    while g_norm > gtol && iterations < max_iter {
        iterations += 1;
        // two-loop recursion
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let hist = s_hist.len();
        let mut alphas = vec![0.0; hist];
        for idx in (0..hist).rev() {
            let a = rho_hist[idx]
                * s_hist[idx]
                    .iter()
                    .zip(&dir)
                    .map(|(si, di)| si * di)
                    .sum::<f64>();
            alphas[idx] = a;
            for (di, yi) in dir.iter_mut().zip(&y_hist[idx]) {
                *di -= a * yi;
            }
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
            let yy: f64 = y.iter().map(|v| v * v).sum();
            if sy > 0.0 && yy > 0.0 {
                let scale = sy / yy;
                for di in dir.iter_mut() {
                    *di *= scale;
                }
            }
        } else {
            // initial scaling: the quadratic term alone has curvature c
            for di in dir.iter_mut() {
                *di /= c.max(1.0);
            }
        }
        for idx in 0..hist {
            let b = rho_hist[idx]
                * y_hist[idx]
                    .iter()
                    .zip(&dir)
                    .map(|(yi, di)| yi * di)
                    .sum::<f64>();
            for (di, si) in dir.iter_mut().zip(&s_hist[idx]) {
                *di += (alphas[idx] - b) * si;
            }
        }

        let slope: f64 = g.iter().zip(&dir).map(|(gi, di)| gi * di).sum();
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            // fall back to steepest descent if curvature history is stale
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            let d: Vec<f64> = g.iter().map(|v| -v / c.max(1.0)).collect();
            let sl: f64 = g.iter().zip(&d).map(|(gi, di)| gi * di).sum();
            (d, sl)
        };

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = u.iter().zip(&dir).map(|(ui, di)| ui + step * di).collect();
            let fc = psi(&cand);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                let gc = psi_grad(&cand);
                let s_vec: Vec<f64> = cand.iter().zip(&u).map(|(a, b)| a - b).collect();
                let y_vec: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy: f64 = s_vec.iter().zip(&y_vec).map(|(a, b)| a * b).sum();
                if sy > 1e-14 {
                    if s_hist.len() == MEM {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                    rho_hist.push(1.0 / sy);
                    s_hist.push(s_vec);
                    y_hist.push(y_vec);
                }
                u = cand;
                f = fc;
                g = gc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    }

    Ok(ProxResult {
        u,
        grad_norm: g_norm,
        iterations,
        converged: g_norm <= gtol,
    })
}

/// Moreau envelope `M(xi; t) = G(u*) + (1/(2t)) |u* - xi|^2` with
/// `u* = prox at weight c = 1/t`.
pub fn moreau_envelope(ctx: &EnvelopeContext, xi: &[f64], inv_c: f64) -> Result<f64> {
    assert!(inv_c > 0.0, "smoothing parameter must be positive");
    let c = 1.0 / inv_c;
    let prox = prox_gn(ctx, xi, c, PROX_DEFAULT_TOL, PROX_DEFAULT_MAX_ITER)?;
    let quad: f64 = prox
        .u
        .iter()
        .zip(xi)
        .map(|(ui, xii)| (ui - xii) * (ui - xii))
        .sum();
    Ok(g_value(ctx, &prox.u) + quad / (2.0 * inv_c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, SortedCohort};

    fn ctx_from(y: &[f64], d: &[bool], q: &[f64], h: &[f64]) -> EnvelopeContext {
        let sorted = SortedCohort::from_observed(y, d);
        let q1: Vec<f64> = sorted.order.iter().map(|&i| q[i]).collect();
        EnvelopeContext {
            reduced: crate::model::ReducedCohort {
                sorted,
                q1,
                kappa: 1.0,
            },
            h: h.to_vec(),
        }
    }

    fn random_ctx(seed: u64, n: usize) -> EnvelopeContext {
        let cfg = ModelConfig::new(1, 1, 1.0);
        EnvelopeContext::generate(&cfg, n, RngStream::new(seed, 0))
    }

    #[test]
    fn no_events_prox_is_identity() {
        let ctx = ctx_from(
            &[3.0, 2.0, 1.0],
            &[false, false, false],
            &[0.1, 0.2, 0.3],
            &[0.0; 3],
        );
        let xi = [1.0, -2.0, 0.5];
        let r = prox_gn(&ctx, &xi, 2.0, 1e-10, 100).unwrap();
        assert!(r.converged);
        for (a, b) in r.u.iter().zip(&xi) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(moreau_envelope(&ctx, &xi, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn single_event_closed_form() {
        // n=1, Delta=1: G(u) = u - ln 1 = u, so u* = xi - 1/c
        let ctx = ctx_from(&[1.0], &[true], &[0.3], &[0.0]);
        let c = 2.5;
        let xi = [0.8];
        let r = prox_gn(&ctx, &xi, c, 1e-12, 500).unwrap();
        assert!(r.converged);
        assert!((r.u[0] - (xi[0] - 1.0 / c)).abs() < 1e-9, "{}", r.u[0]);
        // envelope: value = u* + inv_c/2 * ... = xi - inv_c/2
        let inv_c = 1.0 / c;
        let m = moreau_envelope(&ctx, &xi, inv_c).unwrap();
        assert!((m - (xi[0] - inv_c / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn prox_matches_dense_newton_oracle() {
        // dense-Hessian Newton on the same objective, n = 5
        let ctx = random_ctx(51, 5);
        let xi = normal_sample(RngStream::new(52, 0), 5);
        let c = 1.3;
        let r = prox_gn(&ctx, &xi, c, 1e-12, 2000).unwrap();
        assert!(r.converged);
        let oracle = dense_newton_prox(&ctx, &xi, c);
        for (a, b) in r.u.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", r.u, oracle);
        }
    }

    /// Small dense Newton oracle for the prox objective.
    fn dense_newton_prox(ctx: &EnvelopeContext, xi: &[f64], c: f64) -> Vec<f64> {
        use ndarray::{Array1, Array2};
        let n = ctx.n();
        let sorted = &ctx.reduced.sorted;
        let mut u = Array1::from_vec(xi.to_vec());
        for _ in 0..200 {
            // gradient and Hessian assembled naively from risk sets
            let mut grad = Array1::<f64>::zeros(n);
            let mut hess = Array2::<f64>::zeros((n, n));
            for j in 0..n {
                grad[j] += c * (u[j] - xi[j]);
                hess[[j, j]] += c;
            }
            for &i in &sorted.uncensored {
                let risk: Vec<usize> = (0..=sorted.rho[i]).collect();
                let w: f64 = risk.iter().map(|&j| u[j].exp()).sum();
                for &j in &risk {
                    let pj = u[j].exp() / w;
                    grad[j] += pj;
                    for &l in &risk {
                        let pl = u[l].exp() / w;
                        hess[[j, l]] -= pj * pl;
                    }
                    hess[[j, j]] += pj;
                }
            }
            let step = crate::numeric::linalg::cholesky_solve(&hess, &grad).unwrap();
            let mut max_step = 0.0_f64;
            for j in 0..n {
                u[j] -= step[j];
                max_step = max_step.max(step[j].abs());
            }
            if max_step < 1e-13 {
                break;
            }
        }
        u.to_vec()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ctx = random_ctx(53, 8);
        let u = normal_sample(RngStream::new(54, 0), 8);
        let g = g_gradient(&ctx, &u);
        let h = 1e-6;
        for j in 0..8 {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let want = (g_value(&ctx, &up) - g_value(&ctx, &um)) / (2.0 * h);
            assert!(
                (g[j] - want).abs() < 1e-5 * want.abs().max(1.0),
                "coord {j}: {} vs {want}",
                g[j]
            );
        }
    }

    #[test]
    fn envelope_gradient_identity_by_finite_differences() {
        // grad_xi M(xi; 1/c) = c (xi - prox)
        let ctx = random_ctx(55, 6);
        let xi = normal_sample(RngStream::new(56, 0), 6);
        let c = 0.8;
        let inv_c = 1.0 / c;
        let prox = prox_gn(&ctx, &xi, c, 1e-11, 2000).unwrap();
        assert!(prox.converged);
        let h = 1e-5;
        for j in 0..6 {
            let mut xp = xi.clone();
            let mut xm = xi.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (moreau_envelope(&ctx, &xp, inv_c).unwrap()
                - moreau_envelope(&ctx, &xm, inv_c).unwrap())
                / (2.0 * h);
            let want = c * (xi[j] - prox.u[j]);
            assert!(
                (fd - want).abs() <= 1e-4 * want.abs().max(1.0),
                "coord {j}: fd {fd} vs {want}"
            );
        }
    }

    #[test]
    fn envelope_nonincreasing_in_smoothing() {
        // dM/dt = -|xi - prox|^2 / (2 t^2) <= 0, so larger t gives a smaller
        // (or equal) envelope value
        let ctx = random_ctx(57, 7);
        let xi = normal_sample(RngStream::new(58, 0), 7);
        let m1 = moreau_envelope(&ctx, &xi, 2.0).unwrap();
        let m2 = moreau_envelope(&ctx, &xi, 0.5).unwrap();
        assert!(m1 <= m2 + 1e-9, "t=2: {m1}, t=0.5: {m2}");
    }

    #[test]
    fn prox_first_order_optimality_and_descent() {
        let ctx = random_ctx(59, 30);
        let xi = normal_sample(RngStream::new(60, 0), 30);
        let c = 1.7;
        let r = prox_gn(&ctx, &xi, c, PROX_DEFAULT_TOL, PROX_DEFAULT_MAX_ITER).unwrap();
        assert!(r.converged);
        let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r.grad_norm <= PROX_DEFAULT_TOL * xi_norm.max(1.0));
        // objective at u* no greater than at xi
        let at_xi = g_value(&ctx, &xi);
        let at_u = g_value(&ctx, &r.u)
            + 0.5
                * c
                * r.u
                    .iter()
                    .zip(&xi)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
        assert!(at_u <= at_xi + 1e-10);
    }
}
