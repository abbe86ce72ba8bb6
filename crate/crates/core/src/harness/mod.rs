//! Experiment harness: reproduces the phase diagram, consistency curves,
//! null-distribution checks and classical-failure demonstrations at
//! configurable scale, with deterministic seeded replication and flat-file
//! outputs.

pub mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

use crate::boundary::{boundary_curve, BoundaryPoint};
use crate::error::{CoxError, Result};
use crate::existence::{build_reduced_constraints, lp_max, EXISTENCE_DEFAULT_TOL};
use crate::fit::{fisher_std, fit_mple, lrt_stat, FIT_DEFAULT_MAX_ITER, FIT_DEFAULT_TOL};
use crate::inference::{corrected_pvalues, empirical_ab, ks_uniform_stat, wald_chi2};
use crate::model::{gen_beta, generate_cohort, sort_cohort, BetaScheme, ModelConfig};
use crate::numeric::rng::RngStream;
use crate::state::{
    solve_state_equations, EnvelopeContext, StateConstants, StateSolution, STATE_DEFAULT_NREP,
    STATE_DEFAULT_TOL,
};
use io::fmt;

/// Distinct seed families, derived by fixed offsets of the base seed so the
/// replication, boundary and state-solver draws never share a stream.
const FAMILY_BOUNDARY: u64 = 0x9E37_79B9_7F4A_7C15;
const FAMILY_STATE: u64 = 0x3C6E_F372_FE94_F82A;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseDiagram,
    Consistency,
    NullDist,
    ClassicalFailure,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PhaseDiagram => "phase_diagram",
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::NullDist => "null_dist",
            ExperimentKind::ClassicalFailure => "classical_failure",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "phase_diagram" => Ok(ExperimentKind::PhaseDiagram),
            "consistency" => Ok(ExperimentKind::Consistency),
            "null_dist" => Ok(ExperimentKind::NullDist),
            "classical_failure" => Ok(ExperimentKind::ClassicalFailure),
            other => Err(CoxError::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grids {
    pub delta: Vec<f64>,
    pub kappa: Vec<f64>,
}

fn default_chi2_l() -> Vec<u32> {
    vec![2, 5]
}
fn default_null_coords() -> usize {
    50
}
fn default_chi2_min_pool() -> usize {
    1000
}
fn default_state_nrep() -> usize {
    STATE_DEFAULT_NREP
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    pub grids: Grids,
    pub reps: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Replications for the theoretical boundary companion curve.
    #[serde(default)]
    pub boundary_reps: Option<usize>,
    /// Sample size for the boundary QP draws (defaults to model.n).
    #[serde(default)]
    pub boundary_n: Option<usize>,
    /// How many null coordinates to pool for the corrected z family.
    #[serde(default = "default_null_coords")]
    pub null_coords: usize,
    /// Degrees of freedom for the Wald chi-square families.
    #[serde(default = "default_chi2_l")]
    pub chi2_l: Vec<u32>,
    /// Minimum pooled chi-square sample per family; block starts are strided
    /// when disjoint blocks cannot reach it.
    #[serde(default = "default_chi2_min_pool")]
    pub chi2_min_pool: usize,
    /// Representative-sample size for the state-equation solver.
    #[serde(default = "default_state_nrep")]
    pub state_nrep: usize,
    /// Worker threads (default: available parallelism).
    #[serde(default)]
    pub workers: Option<usize>,
    /// Also emit gnuplot scripts next to the CSVs.
    #[serde(default)]
    pub gnuplot: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.grids.delta.is_empty() || self.grids.kappa.is_empty() {
            return Err(CoxError::Config("grids must be nonempty".into()));
        }
        if self.reps == 0 {
            return Err(CoxError::Config("reps must be at least 1".into()));
        }
        if self.experiment == ExperimentKind::NullDist
            && self.model.beta_scheme != BetaScheme::HalfSparse
        {
            return Err(CoxError::Config(
                "null_dist requires beta_scheme = half_sparse".into(),
            ));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w.max(1));
        }
        b.build()
            .map_err(|e| CoxError::Config(format!("worker pool: {e}")))
    }
}

/// `p = round(delta * n)`, at least 1; the realized aspect ratio is `p/n`.
pub fn dimension_for(delta: f64, n: usize) -> usize {
    ((delta * n as f64).round() as usize).max(1)
}

fn cell_model(base: &ModelConfig, delta: f64, kappa: f64) -> ModelConfig {
    let mut m = base.clone();
    m.p = dimension_for(delta, base.n);
    m.kappa = kappa;
    m
}

/// Per-replication beta stream: frozen betas live past the replication ids.
fn beta_stream(seed: u64, cells: usize, reps: usize, cell: usize, rep: usize, fixed: bool) -> RngStream {
    if fixed {
        RngStream::for_replication(seed, (cells * reps + cell) as u64, 0)
    } else {
        RngStream::for_replication(seed, (cell * reps + rep) as u64, 0)
    }
}

fn cohort_stream(seed: u64, reps: usize, cell: usize, rep: usize) -> RngStream {
    RngStream::for_replication(seed, (cell * reps + rep) as u64, 1)
}

fn state_solution_for_cell(
    cfg: &ExperimentConfig,
    model: &ModelConfig,
    delta: f64,
    cell: usize,
) -> Result<(StateConstants, StateSolution)> {
    let consts = StateConstants::compute(
        model.kappa,
        delta,
        model.baseline_rate,
        model.censor_lo,
        model.censor_hi,
        64,
    );
    let ctx = EnvelopeContext::generate(
        model,
        cfg.state_nrep,
        RngStream::new(cfg.seed.wrapping_add(FAMILY_STATE), cell as u64),
    );
    let sol = solve_state_equations(&ctx, &consts, None, STATE_DEFAULT_TOL)?;
    Ok((consts, sol))
}

// ---------------------------------------------------------------------------
// phase diagram
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PhaseCell {
    pub delta: f64,
    pub kappa: f64,
    pub exist_frac: f64,
    pub reps: usize,
    pub p: usize,
    pub failures: usize,
}

#[derive(Debug)]
pub struct PhaseDiagramResult {
    pub cells: Vec<PhaseCell>,
    pub boundary: Vec<BoundaryPoint>,
    pub files: Vec<PathBuf>,
}

pub fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<PhaseDiagramResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.pool()?;
    let cells: Vec<(usize, f64, f64)> = cfg
        .grids
        .delta
        .iter()
        .flat_map(|&d| cfg.grids.kappa.iter().map(move |&k| (d, k)))
        .enumerate()
        .map(|(i, (d, k))| (i, d, k))
        .collect();
    let n_cells = cells.len();
    let reps = cfg.reps;

    let out_cells: Vec<PhaseCell> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(cell, delta, kappa)| {
                let model = cell_model(&cfg.model, delta, kappa);
                let results: Vec<Option<bool>> = (0..reps)
                    .into_par_iter()
                    .map(|rep| {
                        let beta = gen_beta(
                            &model,
                            beta_stream(cfg.seed, n_cells, reps, cell, rep, model.fix_beta),
                        );
                        let cohort =
                            generate_cohort(&model, &beta, cohort_stream(cfg.seed, reps, cell, rep));
                        let sorted = sort_cohort(&cohort);
                        build_reduced_constraints(&sorted, &cohort.x)
                            .and_then(|cm| lp_max(&cm))
                            .map(|v| v <= EXISTENCE_DEFAULT_TOL)
                            .ok()
                    })
                    .collect();
                let failures = results.iter().filter(|r| r.is_none()).count();
                let ok: Vec<bool> = results.into_iter().flatten().collect();
                let exist_frac = if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().filter(|&&e| e).count() as f64 / ok.len() as f64
                };
                PhaseCell {
                    delta,
                    kappa,
                    exist_frac,
                    reps,
                    p: model.p,
                    failures,
                }
            })
            .collect()
    });

    let boundary_n = cfg.boundary_n.unwrap_or(cfg.model.n);
    let boundary_reps = cfg.boundary_reps.unwrap_or(500);
    let boundary = pool.install(|| {
        boundary_curve(
            &cfg.model,
            &cfg.grids.kappa,
            boundary_n,
            boundary_reps,
            RngStream::new(cfg.seed.wrapping_add(FAMILY_BOUNDARY), 0),
        )
    })?;

    let mut files = Vec::new();
    let rows: Vec<String> = out_cells
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{},{}",
                fmt(c.delta),
                fmt(c.kappa),
                fmt(c.exist_frac),
                c.reps - c.failures,
                c.p,
                fmt(c.p as f64 / cfg.model.n as f64)
            )
        })
        .collect();
    files.push(io::write_csv(
        &cfg.out_dir,
        "phase_empirical.csv",
        "delta,kappa,exist_frac,reps,p,delta_realized",
        &rows,
    )?);
    let brows: Vec<String> = boundary
        .iter()
        .map(|b| {
            format!(
                "{},{},{},{},{}",
                fmt(b.kappa),
                fmt(b.delta_hat),
                fmt(b.stderr),
                boundary_n,
                boundary_reps
            )
        })
        .collect();
    files.push(io::write_csv(
        &cfg.out_dir,
        "phase_boundary.csv",
        "kappa,delta_hat,stderr,n,reps",
        &brows,
    )?);
    let failures: usize = out_cells.iter().map(|c| c.failures).sum();
    files.push(io::write_sidecar(
        &cfg.out_dir,
        "phase_diagram",
        cfg,
        start.elapsed().as_secs_f64(),
        &[("replication_failures".into(), failures as f64)],
    )?);
    if cfg.gnuplot {
        files.push(io::write_gnuplot(
            &cfg.out_dir,
            "phase_diagram.gnuplot",
            "set datafile separator ','\n\
             set xlabel 'kappa'\n\
             set ylabel 'delta'\n\
             set title 'MPLE existence frequency and theoretical boundary'\n\
             plot 'phase_empirical.csv' using 2:1:3 skip 1 with points palette pt 5 title 'exist fraction', \\\n\
                  'phase_boundary.csv' using 1:2 skip 1 with lines lw 2 title 'boundary'\n",
        )?);
    }
    Ok(PhaseDiagramResult {
        cells: out_cells,
        boundary,
        files,
    })
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConsistencyCell {
    pub kappa: f64,
    pub delta: f64,
    pub a_hat_mean: f64,
    pub a_hat_se: f64,
    pub b_hat_mean: f64,
    pub b_hat_se: f64,
    pub a_star: f64,
    pub b_star: f64,
    pub solver_converged: bool,
    pub reps_used: usize,
    pub diverged: usize,
}

#[derive(Debug)]
pub struct ConsistencyResult {
    pub cells: Vec<ConsistencyCell>,
    pub files: Vec<PathBuf>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ConsistencyResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.pool()?;
    let cells: Vec<(usize, f64, f64)> = cfg
        .grids
        .kappa
        .iter()
        .flat_map(|&k| cfg.grids.delta.iter().map(move |&d| (k, d)))
        .enumerate()
        .map(|(i, (k, d))| (i, k, d))
        .collect();
    let n_cells = cells.len();
    let reps = cfg.reps;

    let mut out_cells = Vec::with_capacity(n_cells);
    for &(cell, kappa, delta) in &cells {
        let model = cell_model(&cfg.model, delta, kappa);
        // theoretical constants once per cell; non-convergence is recorded,
        // not fatal
        let (a_star, b_star, solver_converged) =
            match state_solution_for_cell(cfg, &model, delta, cell) {
                Ok((_, sol)) => (sol.a_star, sol.b_star, sol.converged),
                Err(_) => (f64::NAN, f64::NAN, false),
            };
        let fits: Vec<Option<(f64, f64)>> = pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let beta = gen_beta(
                        &model,
                        beta_stream(cfg.seed, n_cells, reps, cell, rep, model.fix_beta),
                    );
                    let cohort =
                        generate_cohort(&model, &beta, cohort_stream(cfg.seed, reps, cell, rep));
                    let sorted = sort_cohort(&cohort);
                    match fit_mple(&sorted, &cohort.x, None, FIT_DEFAULT_TOL, FIT_DEFAULT_MAX_ITER)
                    {
                        Ok(fit) if !fit.diverged => {
                            empirical_ab(fit.beta_hat.as_slice().unwrap(), beta.as_slice().unwrap())
                                .ok()
                        }
                        _ => None,
                    }
                })
                .collect()
        });
        let good: Vec<(f64, f64)> = fits.iter().flatten().copied().collect();
        let diverged = reps - good.len();
        let (a_hat_mean, a_hat_se) = mean_se(&good.iter().map(|g| g.0).collect::<Vec<_>>());
        let (b_hat_mean, b_hat_se) = mean_se(&good.iter().map(|g| g.1).collect::<Vec<_>>());
        out_cells.push(ConsistencyCell {
            kappa,
            delta,
            a_hat_mean,
            a_hat_se,
            b_hat_mean,
            b_hat_se,
            a_star,
            b_star,
            solver_converged,
            reps_used: good.len(),
            diverged,
        });
    }

    let rows: Vec<String> = out_cells
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt(c.kappa),
                fmt(c.delta),
                fmt(c.a_hat_mean),
                fmt(c.a_hat_se),
                fmt(c.b_hat_mean),
                fmt(c.b_hat_se),
                fmt(c.a_star),
                fmt(c.b_star),
                c.solver_converged,
                c.reps_used,
                c.diverged
            )
        })
        .collect();
    let mut files = vec![io::write_csv(
        &cfg.out_dir,
        "consistency.csv",
        "kappa,delta,a_hat_mean,a_hat_se,b_hat_mean,b_hat_se,a_star,b_star,solver_converged,reps_used,diverged",
        &rows,
    )?];
    let diverged: usize = out_cells.iter().map(|c| c.diverged).sum();
    files.push(io::write_sidecar(
        &cfg.out_dir,
        "consistency",
        cfg,
        start.elapsed().as_secs_f64(),
        &[("diverged_fits".into(), diverged as f64)],
    )?);
    if cfg.gnuplot {
        files.push(io::write_gnuplot(
            &cfg.out_dir,
            "consistency.gnuplot",
            "set datafile separator ','\n\
             set xlabel 'kappa'\n\
             set ylabel 'value'\n\
             set title 'empirical vs theoretical bias and spread'\n\
             plot 'consistency.csv' using 1:3 skip 1 with linespoints title 'a-hat', \\\n\
                  'consistency.csv' using 1:7 skip 1 with lines title 'a*', \\\n\
                  'consistency.csv' using 1:5 skip 1 with linespoints title 'b-hat', \\\n\
                  'consistency.csv' using 1:8 skip 1 with lines title 'b*'\n",
        )?);
    }
    Ok(ConsistencyResult {
        cells: out_cells,
        files,
    })
}

// ---------------------------------------------------------------------------
// null distribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PvalueFamily {
    pub family: String,
    pub count: usize,
    pub ks_d: f64,
}

#[derive(Debug, Clone)]
pub struct NullDistCell {
    pub delta: f64,
    pub kappa: f64,
    pub b_star: f64,
    pub solver_converged: bool,
    pub families: Vec<PvalueFamily>,
    pub diverged: usize,
}

#[derive(Debug)]
pub struct NullDistResult {
    pub cells: Vec<NullDistCell>,
    pub files: Vec<PathBuf>,
}

/// Starting offsets into the null-coordinate list for the chi-square blocks:
/// disjoint consecutive blocks when they reach the pooling target, evenly
/// strided (overlapping) starts otherwise.
pub fn chi2_block_starts(n_null: usize, l: usize, reps: usize, min_pool: usize) -> Vec<usize> {
    if l == 0 || l > n_null {
        return Vec::new();
    }
    let disjoint = n_null / l;
    if disjoint * reps >= min_pool {
        return (0..disjoint).map(|b| b * l).collect();
    }
    let wanted = min_pool.div_ceil(reps).max(disjoint);
    let span = n_null - l;
    if wanted <= 1 || span == 0 {
        return vec![0];
    }
    let mut starts: Vec<usize> = (0..wanted)
        .map(|t| (t as f64 * span as f64 / (wanted as f64 - 1.0)).round() as usize)
        .collect();
    starts.dedup();
    starts
}

pub fn run_null_distribution(cfg: &ExperimentConfig) -> Result<NullDistResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.pool()?;
    let cells: Vec<(usize, f64, f64)> = cfg
        .grids
        .delta
        .iter()
        .flat_map(|&d| cfg.grids.kappa.iter().map(move |&k| (d, k)))
        .enumerate()
        .map(|(i, (d, k))| (i, d, k))
        .collect();
    let n_cells = cells.len();
    let reps = cfg.reps;

    let mut out_cells = Vec::new();
    let mut pv_rows: Vec<String> = Vec::new();
    let mut chi_rows: Vec<String> = Vec::new();
    let mut summary_rows: Vec<String> = Vec::new();

    for &(cell, delta, kappa) in &cells {
        let model = cell_model(&cfg.model, delta, kappa);
        let p = model.p;
        let nz = p.div_ceil(2);
        let null_idx: Vec<usize> = (nz..p).collect();
        if null_idx.is_empty() {
            return Err(CoxError::Config(
                "no null coordinates at this dimension".into(),
            ));
        }
        let designated: Vec<usize> = null_idx
            .iter()
            .copied()
            .take(cfg.null_coords.max(1))
            .collect();

        let (_, sol) = state_solution_for_cell(cfg, &model, delta, cell)?;
        let b_star = sol.b_star;

        // per replication: corrected + classical p-values on the designated
        // nulls, chi-square p-values on block statistics over all nulls
        type RepOut = Option<(Vec<f64>, Vec<f64>, Vec<(u32, usize, f64)>)>;
        let rep_results: Vec<RepOut> = pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let beta = gen_beta(
                        &model,
                        beta_stream(cfg.seed, n_cells, reps, cell, rep, model.fix_beta),
                    );
                    let cohort =
                        generate_cohort(&model, &beta, cohort_stream(cfg.seed, reps, cell, rep));
                    let sorted = sort_cohort(&cohort);
                    let fit = match fit_mple(
                        &sorted,
                        &cohort.x,
                        None,
                        FIT_DEFAULT_TOL,
                        FIT_DEFAULT_MAX_ITER,
                    ) {
                        Ok(f) if !f.diverged => f,
                        _ => return None,
                    };
                    let bh = fit.beta_hat.as_slice().unwrap();
                    let des_vals: Vec<f64> = designated.iter().map(|&j| bh[j]).collect();
                    let corrected = corrected_pvalues(&des_vals, b_star).ok()?;
                    // classical z against the Fisher std at the truth
                    let fstd = fisher_std(&sorted, &cohort.x, &beta).ok()?;
                    let classical: Vec<f64> = designated
                        .iter()
                        .map(|&j| {
                            let z = bh[j] / fstd[j];
                            2.0 * crate::numeric::normal_cdf(-z.abs())
                        })
                        .collect();
                    let mut chis = Vec::new();
                    for &l in &cfg.chi2_l {
                        let starts =
                            chi2_block_starts(null_idx.len(), l as usize, reps, cfg.chi2_min_pool);
                        for (block, &s) in starts.iter().enumerate() {
                            let vals: Vec<f64> = null_idx[s..s + l as usize]
                                .iter()
                                .map(|&j| bh[j])
                                .collect();
                            if let Ok(rep_chi) = wald_chi2(&vals, b_star) {
                                chis.push((l, block, rep_chi.p_value));
                            }
                        }
                    }
                    Some((corrected, classical, chis))
                })
                .collect()
        });

        let diverged = rep_results.iter().filter(|r| r.is_none()).count();
        let mut pooled_corrected = Vec::new();
        let mut pooled_classical = Vec::new();
        let mut pooled_chi: std::collections::BTreeMap<u32, Vec<f64>> = Default::default();
        for (rep, out) in rep_results.iter().enumerate() {
            let Some((corrected, classical, chis)) = out else {
                continue;
            };
            for (&j, (&pc, &pz)) in designated
                .iter()
                .zip(corrected.iter().zip(classical.iter()))
            {
                pv_rows.push(format!(
                    "{},{},{},{},{},{}",
                    fmt(delta),
                    fmt(kappa),
                    rep,
                    j,
                    fmt(pc),
                    fmt(pz)
                ));
                pooled_corrected.push(pc);
                pooled_classical.push(pz);
            }
            for &(l, block, pv) in chis {
                chi_rows.push(format!(
                    "{},{},{},{},{},{}",
                    fmt(delta),
                    fmt(kappa),
                    rep,
                    l,
                    block,
                    fmt(pv)
                ));
                pooled_chi.entry(l).or_default().push(pv);
            }
        }

        let mut families = Vec::new();
        let mut push_family = |name: String, vals: &[f64]| -> Result<()> {
            if !vals.is_empty() {
                let d = ks_uniform_stat(vals)?;
                summary_rows.push(format!(
                    "{},{},{},{},{}",
                    fmt(delta),
                    fmt(kappa),
                    name,
                    vals.len(),
                    fmt(d)
                ));
                families.push(PvalueFamily {
                    family: name,
                    count: vals.len(),
                    ks_d: d,
                });
            }
            Ok(())
        };
        push_family("corrected_z".into(), &pooled_corrected)?;
        push_family("classical_z".into(), &pooled_classical)?;
        for (l, vals) in &pooled_chi {
            push_family(format!("chi2_l{l}"), vals)?;
        }

        out_cells.push(NullDistCell {
            delta,
            kappa,
            b_star,
            solver_converged: sol.converged,
            families,
            diverged,
        });
    }

    let mut files = Vec::new();
    files.push(io::write_csv(
        &cfg.out_dir,
        "null_pvalues.csv",
        "delta,kappa,rep,coord,p_corrected,p_classical",
        &pv_rows,
    )?);
    files.push(io::write_csv(
        &cfg.out_dir,
        "null_chi2.csv",
        "delta,kappa,rep,l,block,p_value",
        &chi_rows,
    )?);
    files.push(io::write_csv(
        &cfg.out_dir,
        "null_summary.csv",
        "delta,kappa,family,count,ks_d",
        &summary_rows,
    )?);
    let diverged: usize = out_cells.iter().map(|c| c.diverged).sum();
    files.push(io::write_sidecar(
        &cfg.out_dir,
        "null_dist",
        cfg,
        start.elapsed().as_secs_f64(),
        &[("diverged_fits".into(), diverged as f64)],
    )?);
    if cfg.gnuplot {
        files.push(io::write_gnuplot(
            &cfg.out_dir,
            "null_dist.gnuplot",
            "set datafile separator ','\n\
             set xlabel 'p-value'\n\
             set title 'corrected null p-values'\n\
             binwidth = 0.05\n\
             bin(x, w) = w * floor(x / w) + w / 2.0\n\
             plot 'null_pvalues.csv' using (bin($5, binwidth)):(1.0) skip 1 smooth freq with boxes title 'corrected z'\n",
        )?);
    }
    Ok(NullDistResult {
        cells: out_cells,
        files,
    })
}

// ---------------------------------------------------------------------------
// classical failure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CoordStd {
    pub coord: usize,
    pub empirical_std: f64,
    pub mean_fisher_std: f64,
    pub ratio: f64,
}

#[derive(Debug)]
pub struct ClassicalFailureResult {
    pub per_coord: Vec<CoordStd>,
    pub ratio_mean: f64,
    pub lrt_ks_d: f64,
    pub slope: f64,
    pub a_star: f64,
    pub solver_converged: bool,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
}

/// Classical-failure demonstration on the first grid cell. The coefficient
/// vector is frozen across replications: per-coordinate sampling standard
/// deviations are only meaningful against a fixed truth.
pub fn run_classical_failure(cfg: &ExperimentConfig) -> Result<ClassicalFailureResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = cfg.pool()?;
    let delta = cfg.grids.delta[0];
    let kappa = cfg.grids.kappa[0];
    let model = cell_model(&cfg.model, delta, kappa);
    let p = model.p;
    let reps = cfg.reps;

    let beta = gen_beta(&model, beta_stream(cfg.seed, 1, reps, 0, 0, true));
    let null_idx: Vec<usize> = (0..p).filter(|&j| beta[j] == 0.0).collect();
    let lrt_coord = null_idx.first().copied();

    let (a_star, solver_converged) = match state_solution_for_cell(cfg, &model, delta, 0) {
        Ok((_, sol)) => (sol.a_star, sol.converged),
        Err(_) => (f64::NAN, false),
    };

    type RepOut = Option<(Vec<f64>, Vec<f64>, Option<f64>)>;
    let rep_results: Vec<RepOut> = pool.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let cohort = generate_cohort(&model, &beta, cohort_stream(cfg.seed, reps, 0, rep));
                let sorted = sort_cohort(&cohort);
                let fit = match fit_mple(
                    &sorted,
                    &cohort.x,
                    None,
                    FIT_DEFAULT_TOL,
                    FIT_DEFAULT_MAX_ITER,
                ) {
                    Ok(f) if !f.diverged => f,
                    _ => return None,
                };
                let fstd = fisher_std(&sorted, &cohort.x, &beta).ok()?;
                let lrt_p = lrt_coord.and_then(|j| {
                    lrt_stat(&sorted, &cohort.x, j, FIT_DEFAULT_TOL).ok().map(|stat| {
                        1.0 - crate::numeric::chi_square_cdf(stat, 1)
                    })
                });
                Some((fit.beta_hat.to_vec(), fstd, lrt_p))
            })
            .collect()
    });
    let diverged = rep_results.iter().filter(|r| r.is_none()).count();
    let good: Vec<&(Vec<f64>, Vec<f64>, Option<f64>)> =
        rep_results.iter().flatten().collect();
    if good.is_empty() {
        return Err(CoxError::FitDiverged);
    }

    // per-null-coordinate empirical std across replications vs mean Fisher std
    let mut per_coord = Vec::with_capacity(null_idx.len());
    for &j in &null_idx {
        let vals: Vec<f64> = good.iter().map(|(bh, _, _)| bh[j]).collect();
        let (mean, _) = mean_se(&vals);
        let emp_std = if vals.len() > 1 {
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() as f64 - 1.0))
                .sqrt()
        } else {
            f64::NAN
        };
        let mean_fisher = good.iter().map(|(_, f, _)| f[j]).sum::<f64>() / good.len() as f64;
        per_coord.push(CoordStd {
            coord: j,
            empirical_std: emp_std,
            mean_fisher_std: mean_fisher,
            ratio: emp_std / mean_fisher,
        });
    }
    let ratio_mean = per_coord.iter().map(|c| c.ratio).sum::<f64>() / per_coord.len().max(1) as f64;

    // pooled least-squares slope of beta-hat on the fixed truth
    let mut num = 0.0;
    let mut den = 0.0;
    for (bh, _, _) in good.iter() {
        for j in 0..p {
            num += bh[j] * beta[j];
            den += beta[j] * beta[j];
        }
    }
    let slope = num / den;

    let lrt_pvals: Vec<f64> = good.iter().filter_map(|(_, _, l)| *l).collect();
    let lrt_ks_d = if lrt_pvals.is_empty() {
        f64::NAN
    } else {
        ks_uniform_stat(&lrt_pvals)?
    };

    let mut files = Vec::new();
    let rows: Vec<String> = per_coord
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{}",
                c.coord,
                fmt(c.empirical_std),
                fmt(c.mean_fisher_std),
                fmt(c.ratio)
            )
        })
        .collect();
    files.push(io::write_csv(
        &cfg.out_dir,
        "classical_std.csv",
        "coord,empirical_std,mean_fisher_std,ratio",
        &rows,
    )?);
    let lrt_rows: Vec<String> = good
        .iter()
        .enumerate()
        .filter_map(|(i, (_, _, l))| l.map(|p| format!("{i},{}", fmt(p))))
        .collect();
    files.push(io::write_csv(
        &cfg.out_dir,
        "classical_lrt_pvalues.csv",
        "rep,p_value",
        &lrt_rows,
    )?);
    let summary = vec![
        format!("ratio_mean,{}", fmt(ratio_mean)),
        format!("lrt_ks_d,{}", fmt(lrt_ks_d)),
        format!("slope,{}", fmt(slope)),
        format!("a_star,{}", fmt(a_star)),
        format!("solver_converged,{solver_converged}"),
        format!("diverged,{diverged}"),
        format!("reps_used,{}", good.len()),
    ];
    files.push(io::write_csv(
        &cfg.out_dir,
        "classical_summary.csv",
        "metric,value",
        &summary,
    )?);
    files.push(io::write_sidecar(
        &cfg.out_dir,
        "classical_failure",
        cfg,
        start.elapsed().as_secs_f64(),
        &[("diverged_fits".into(), diverged as f64)],
    )?);
    if cfg.gnuplot {
        files.push(io::write_gnuplot(
            &cfg.out_dir,
            "classical_failure.gnuplot",
            "set datafile separator ','\n\
             set xlabel 'null coordinate'\n\
             set ylabel 'std'\n\
             set title 'empirical vs Fisher standard deviation'\n\
             plot 'classical_std.csv' using 1:2 skip 1 with points title 'empirical', \\\n\
                  'classical_std.csv' using 1:3 skip 1 with points title 'Fisher'\n",
        )?);
    }
    Ok(ClassicalFailureResult {
        per_coord,
        ratio_mean,
        lrt_ks_d,
        slope,
        a_star,
        solver_converged,
        diverged,
        files,
    })
}

/// Dispatch an experiment by kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cfg.experiment {
        ExperimentKind::PhaseDiagram => run_phase_diagram(cfg).map(|r| r.files),
        ExperimentKind::Consistency => run_consistency(cfg).map(|r| r.files),
        ExperimentKind::NullDist => run_null_distribution(cfg).map(|r| r.files),
        ExperimentKind::ClassicalFailure => run_classical_failure(cfg).map(|r| r.files),
    }
}
