//! Theoretical existence boundary: squared distance from a Gaussian vector
//! to the order cone plus the span of the scalar covariate, averaged over
//! Monte Carlo replications, traced over a signal-strength grid.

use rayon::prelude::*;

use crate::error::{CoxError, Result};
use crate::model::{reduce_to_1d, ModelConfig, ReducedCohort};
use crate::numeric::dykstra::{dykstra_project, HalfspaceSet, DYKSTRA_DEFAULT_MAX_ITER};
use crate::numeric::rng::{normal_sample, RngStream};

pub const QP_DEFAULT_TOL: f64 = 1e-9;
pub const QP_MAX_SWEEPS: usize = 10_000;
const QP_DYKSTRA_TOL: f64 = 1e-8;

/// The order cone of a sorted reduced cohort in pairwise form: one halfspace
/// `m_i >= m_{k_i}` per index with a later event, one equality per adjacent
/// pair of tied events.
#[derive(Debug, Clone)]
pub struct ConeM {
    pub dim: usize,
    /// (i, k_i) pairs meaning m_i >= m_{k_i}.
    pub halfspaces: Vec<(usize, usize)>,
    pub equalities: Vec<(usize, usize)>,
}

impl ConeM {
    pub fn to_halfspace_set(&self) -> HalfspaceSet {
        let mut set = HalfspaceSet::new(self.dim);
        for &(i, k) in &self.halfspaces {
            set.push_sparse_row(vec![(i, 1.0), (k, -1.0)])
                .expect("cone indices validated at construction");
        }
        for &(i, j) in &self.equalities {
            set.push_equality(i, j)
                .expect("cone indices validated at construction");
        }
        set
    }
}

/// Build the cone description from a sorted reduced cohort.
///
/// Indices with no later event contribute nothing, and an event in the first
/// position is only ever a target, matching the convention that the largest
/// observation adds no constraint of its own. All censored: no constraints.
pub fn build_cone(reduced: &ReducedCohort) -> ConeM {
    let sorted = &reduced.sorted;
    let n = sorted.n();
    let mut halfspaces = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if let Some(k) = sorted.next_uncensored[i] {
            halfspaces.push((i, k));
        }
    }
    let mut equalities = Vec::new();
    for group in &sorted.tie_groups {
        for pair in group.windows(2) {
            equalities.push((pair[0], pair[1]));
        }
    }
    ConeM {
        dim: n,
        halfspaces,
        equalities,
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    /// (1/n) * squared distance of h to span(q) + M.
    pub value: f64,
    pub t: f64,
    pub m: Vec<f64>,
    pub outer_iterations: usize,
}

/// Solve `(1/n) min_{t, m in M} |h - t q - m|^2` by exact alternating
/// minimization: a closed-form t-step and a Dykstra projection m-step.
pub fn qp_solve(reduced: &ReducedCohort, h: &[f64], tol: f64) -> Result<QpSolution> {
    let n = reduced.n();
    if h.len() != n {
        return Err(CoxError::InvalidArgument(format!(
            "h has length {}, expected {}",
            h.len(),
            n
        )));
    }
    let q = &reduced.q1;
    let q_sq: f64 = q.iter().map(|v| v * v).sum();
    let set = build_cone(reduced).to_halfspace_set();

    let mut t = if q_sq > 0.0 {
        h.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / q_sq
    } else {
        0.0
    };
    let mut obj_prev = f64::INFINITY;
    let mut outer = 0;
    loop {
        outer += 1;
        // m-step: project h - t q onto the cone
        let target: Vec<f64> = h.iter().zip(q).map(|(hi, qi)| hi - t * qi).collect();
        let proj = dykstra_project(&target, &set, QP_DYKSTRA_TOL, DYKSTRA_DEFAULT_MAX_ITER)?;
        if !proj.converged {
            return Err(CoxError::ProjectionDidNotConverge);
        }
        let m = proj.point;
        // t-step: exact least squares along q
        if q_sq > 0.0 {
            t = h
                .iter()
                .zip(q)
                .zip(&m)
                .map(|((hi, qi), mi)| (hi - mi) * qi)
                .sum::<f64>()
                / q_sq;
        }
        let obj: f64 = h
            .iter()
            .zip(q)
            .zip(&m)
            .map(|((hi, qi), mi)| {
                let r = hi - t * qi - mi;
                r * r
            })
            .sum();
        let settled = obj_prev.is_finite() && obj_prev - obj <= tol * obj_prev.max(1.0);
        if settled || outer >= QP_MAX_SWEEPS {
            return Ok(QpSolution {
                value: (obj / n as f64).max(0.0),
                t,
                m,
                outer_iterations: outer,
            });
        }
        obj_prev = obj;
    }
}

/// Convenience wrapper returning just the scaled squared distance.
pub fn qp_value(reduced: &ReducedCohort, h: &[f64], tol: f64) -> Result<f64> {
    Ok(qp_solve(reduced, h, tol)?.value)
}

/// Monte Carlo estimate of the boundary quantity at the configured signal
/// strength: mean and standard error of the QP value over `reps`
/// replications, each with a fresh cohort and an independent Gaussian h.
pub fn estimate_h(
    config: &ModelConfig,
    n: usize,
    reps: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    assert!(reps >= 1);
    let values: Vec<Result<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let cohort_stream =
                RngStream::for_replication(stream.base_seed, stream.stream_index + rep as u64, 0);
            let h_stream =
                RngStream::for_replication(stream.base_seed, stream.stream_index + rep as u64, 1);
            let reduced = reduce_to_1d(config, n, cohort_stream);
            let h = normal_sample(h_stream, n);
            qp_value(&reduced, &h, QP_DEFAULT_TOL)
        })
        .collect();
    let mut vals = Vec::with_capacity(reps);
    for v in values {
        vals.push(v?);
    }
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let stderr = if reps > 1 {
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps as f64 - 1.0);
        (var / reps as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub kappa: f64,
    pub delta_hat: f64,
    pub stderr: f64,
}

/// Trace the existence boundary over a kappa grid. One `estimate_h` call per
/// grid point, streams disjoint across points and replications.
pub fn boundary_curve(
    template: &ModelConfig,
    kappa_grid: &[f64],
    n: usize,
    reps: usize,
    stream: RngStream,
) -> Result<Vec<BoundaryPoint>> {
    if kappa_grid.is_empty() {
        return Err(CoxError::InvalidArgument("empty kappa grid".into()));
    }
    let mut out = Vec::with_capacity(kappa_grid.len());
    for (idx, &kappa) in kappa_grid.iter().enumerate() {
        let mut cfg = template.clone();
        cfg.kappa = kappa;
        let sub = RngStream::new(
            stream.base_seed,
            stream.stream_index + (idx as u64) * (reps as u64) * 16,
        );
        let (delta_hat, stderr) = estimate_h(&cfg, n, reps, sub)?;
        out.push(BoundaryPoint {
            kappa,
            delta_hat,
            stderr,
        });
    }
    Ok(out)
}
