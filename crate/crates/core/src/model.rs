//! Simulated censored survival cohorts, the decreasing-time sort with its
//! tie convention, and the rotated one-dimensional reduced model.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::error::{CoxError, Result};
use crate::numeric::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaScheme {
    /// Every coordinate drawn as c_k * U[k-1, k+1].
    Phase,
    /// First ceil(p/2) coordinates drawn as c'_k * U[k-1, k+1], rest zero.
    HalfSparse,
}

fn default_true() -> bool {
    true
}

/// Data-generating configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n: usize,
    pub p: usize,
    pub kappa: f64,
    /// Constant baseline hazard rate lambda.
    pub baseline_rate: f64,
    pub censor_lo: f64,
    pub censor_hi: f64,
    pub beta_scheme: BetaScheme,
    /// Rescale beta so that |beta| / sqrt(p) equals kappa exactly.
    #[serde(default = "default_true")]
    pub renormalize_beta: bool,
    /// Freeze one beta draw across replications instead of redrawing.
    #[serde(default)]
    pub fix_beta: bool,
}

impl ModelConfig {
    pub fn new(n: usize, p: usize, kappa: f64) -> Self {
        Self {
            n,
            p,
            kappa,
            baseline_rate: 1.0,
            censor_lo: 1.0,
            censor_hi: 2.0,
            beta_scheme: BetaScheme::Phase,
            renormalize_beta: true,
            fix_beta: false,
        }
    }

    pub fn with_censoring(mut self, lo: f64, hi: f64) -> Self {
        self.censor_lo = lo;
        self.censor_hi = hi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(CoxError::Config("n and p must be positive".into()));
        }
        if self.kappa < 0.0 {
            return Err(CoxError::Config("kappa must be non-negative".into()));
        }
        if self.baseline_rate <= 0.0 {
            return Err(CoxError::Config("baseline_rate must be positive".into()));
        }
        if !(0.0 < self.censor_lo && self.censor_lo <= self.censor_hi) {
            return Err(CoxError::Config(
                "censoring support must satisfy 0 < censor_lo <= censor_hi".into(),
            ));
        }
        Ok(())
    }
}

/// A generated cohort. `y[i] = min(t[i], c[i])`, `delta[i] = (t[i] <= c[i])`.
#[derive(Debug, Clone)]
pub struct Cohort {
    pub x: Array2<f64>,
    pub t: Vec<f64>,
    pub c: Vec<f64>,
    pub y: Vec<f64>,
    pub delta: Vec<bool>,
}

impl Cohort {
    /// Assemble event times and censoring indicators from latent times.
    pub fn assemble(x: Array2<f64>, t: Vec<f64>, c: Vec<f64>) -> Self {
        let y: Vec<f64> = t.iter().zip(&c).map(|(ti, ci)| ti.min(*ci)).collect();
        let delta: Vec<bool> = t.iter().zip(&c).map(|(ti, ci)| ti <= ci).collect();
        Self { x, t, c, y, delta }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn observed(&self) -> ObservedData {
        ObservedData {
            x: self.x.clone(),
            y: self.y.clone(),
            delta: self.delta.clone(),
        }
    }
}

/// The observable part of a cohort (what the CSV format carries).
#[derive(Debug, Clone)]
pub struct ObservedData {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub delta: Vec<bool>,
}

/// Sort structure of a cohort: decreasing event times, censored observations
/// first within ties, stable within each (Y, Delta) class.
#[derive(Debug, Clone)]
pub struct SortedCohort {
    /// order[s] = original row index of sorted position s.
    pub order: Vec<usize>,
    /// Event times in sorted (nonincreasing) order.
    pub y: Vec<f64>,
    /// Indicators in sorted order.
    pub delta: Vec<bool>,
    /// rho[s] = largest sorted index whose time ties or exceeds y[s];
    /// the risk set of s is 0..=rho[s].
    pub rho: Vec<usize>,
    /// Sorted positions of uncensored observations, increasing.
    pub uncensored: Vec<usize>,
    /// next_uncensored[s] = smallest uncensored position strictly after s.
    pub next_uncensored: Vec<Option<usize>>,
    /// Groups (size >= 2) of uncensored positions sharing one event time.
    pub tie_groups: Vec<Vec<usize>>,
}

impl SortedCohort {
    pub fn from_observed(y: &[f64], delta: &[bool]) -> Self {
        let n = y.len();
        let mut order: Vec<usize> = (0..n).collect();
        // stable sort: y decreasing, censored before uncensored within a tie
        order.sort_by(|&a, &b| {
            y[b].partial_cmp(&y[a])
                .unwrap()
                .then_with(|| delta[a].cmp(&delta[b]))
        });
        let sy: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let sd: Vec<bool> = order.iter().map(|&i| delta[i]).collect();

        // rho: last index of each equal-y run
        let mut rho = vec![0usize; n];
        let mut s = 0;
        while s < n {
            let mut e = s;
            while e + 1 < n && sy[e + 1] == sy[s] {
                e += 1;
            }
            for r in rho.iter_mut().take(e + 1).skip(s) {
                *r = e;
            }
            s = e + 1;
        }

        let uncensored: Vec<usize> = (0..n).filter(|&i| sd[i]).collect();
        let mut next_uncensored = vec![None; n];
        let mut next = None;
        for i in (0..n).rev() {
            next_uncensored[i] = next;
            if sd[i] {
                next = Some(i);
            }
        }

        // tie groups among uncensored observations
        let mut tie_groups = Vec::new();
        let mut k = 0;
        while k < uncensored.len() {
            let mut e = k;
            while e + 1 < uncensored.len() && sy[uncensored[e + 1]] == sy[uncensored[k]] {
                e += 1;
            }
            if e > k {
                tie_groups.push(uncensored[k..=e].to_vec());
            }
            k = e + 1;
        }

        Self {
            order,
            y: sy,
            delta: sd,
            rho,
            uncensored,
            next_uncensored,
            tie_groups,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of uncensored observations.
    pub fn events(&self) -> usize {
        self.uncensored.len()
    }
}

/// Sort a cohort under the decreasing-time, censored-first convention.
pub fn sort_cohort(cohort: &Cohort) -> SortedCohort {
    SortedCohort::from_observed(&cohort.y, &cohort.delta)
}

/// Scaling constant for the phase scheme: sqrt(k^2 / (1/3 + k^2)).
pub fn phase_scale(kappa: f64) -> f64 {
    if kappa == 0.0 {
        0.0
    } else {
        (kappa * kappa / (1.0 / 3.0 + kappa * kappa)).sqrt()
    }
}

/// Scaling constant for the half-sparse scheme: sqrt(2 k^2 / (1/3 + k^2)).
pub fn half_sparse_scale(kappa: f64) -> f64 {
    if kappa == 0.0 {
        0.0
    } else {
        (2.0 * kappa * kappa / (1.0 / 3.0 + kappa * kappa)).sqrt()
    }
}

/// Draw the coefficient vector for the configured scheme.
pub fn gen_beta(config: &ModelConfig, stream: RngStream) -> Array1<f64> {
    let p = config.p;
    let k = config.kappa;
    let mut rng = stream.rng();
    let mut beta = Array1::<f64>::zeros(p);
    match config.beta_scheme {
        BetaScheme::Phase => {
            let c = phase_scale(k);
            for j in 0..p {
                let u: f64 = rng.random_range((k - 1.0)..=(k + 1.0));
                beta[j] = c * u;
            }
        }
        BetaScheme::HalfSparse => {
            let c = half_sparse_scale(k);
            let nz = p.div_ceil(2);
            for j in 0..nz {
                let u: f64 = rng.random_range((k - 1.0)..=(k + 1.0));
                beta[j] = c * u;
            }
        }
    }
    if config.renormalize_beta {
        let norm = beta.dot(&beta).sqrt();
        if norm > 0.0 && k > 0.0 {
            let target = k * (p as f64).sqrt();
            beta.mapv_inplace(|v| v * target / norm);
        }
    }
    beta
}

/// Inverse-CDF draw of an exponential survival time with the given rate.
pub fn survival_time_from_uniform(u: f64, rate: f64) -> f64 {
    -u.ln() / rate
}

/// Generate a cohort under the proportional hazards model with constant
/// baseline rate.
///
/// Draw order: covariates row-major, then one uniform per survival time,
/// then one uniform per censoring time.
pub fn generate_cohort(config: &ModelConfig, beta: &Array1<f64>, stream: RngStream) -> Cohort {
    let (n, p) = (config.n, config.p);
    assert_eq!(beta.len(), p, "beta length must equal p");
    let mut rng = stream.rng();
    let sd = 1.0 / (p as f64).sqrt();
    let mut x = Array2::<f64>::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            x[[i, j]] = z * sd;
        }
    }
    let eta = x.dot(beta);
    let mut t = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.random::<f64>();
        let rate = config.baseline_rate * eta[i].exp();
        t.push(survival_time_from_uniform(u, rate));
    }
    let mut c = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>();
        c.push(config.censor_lo + u * (config.censor_hi - config.censor_lo));
    }
    Cohort::assemble(x, t, c)
}

/// The rotated one-dimensional model: event times driven by a single scalar
/// covariate with hazard rate lambda * exp(kappa * q).
#[derive(Debug, Clone)]
pub struct ReducedCohort {
    pub sorted: SortedCohort,
    /// Scalar covariates q_{i1} in sorted order.
    pub q1: Vec<f64>,
    pub kappa: f64,
}

impl ReducedCohort {
    pub fn n(&self) -> usize {
        self.sorted.n()
    }
}

/// Draw a reduced cohort of size `n` and sort it.
///
/// Draw order: q normals, then survival-time uniforms, then censoring
/// uniforms.
pub fn reduce_to_1d(config: &ModelConfig, n: usize, stream: RngStream) -> ReducedCohort {
    let mut rng = stream.rng();
    let q: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut y = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut t_all = Vec::with_capacity(n);
    for &qi in &q {
        let u: f64 = rng.random::<f64>();
        let rate = config.baseline_rate * (config.kappa * qi).exp();
        t_all.push(survival_time_from_uniform(u, rate));
    }
    for &ti in &t_all {
        let u: f64 = rng.random::<f64>();
        let ci = config.censor_lo + u * (config.censor_hi - config.censor_lo);
        y.push(ti.min(ci));
        delta.push(ti <= ci);
    }
    let sorted = SortedCohort::from_observed(&y, &delta);
    let q1: Vec<f64> = sorted.order.iter().map(|&i| q[i]).collect();
    ReducedCohort {
        sorted,
        q1,
        kappa: config.kappa,
    }
}

/// Write the columnar cohort CSV: `id,Y,Delta,X1..Xp`.
pub fn write_cohort_csv<W: Write>(data: &ObservedData, out: &mut W) -> Result<()> {
    let p = data.x.ncols();
    write!(out, "id,Y,Delta")?;
    for j in 1..=p {
        write!(out, ",X{j}")?;
    }
    writeln!(out)?;
    for i in 0..data.y.len() {
        write!(out, "{},{},{}", i + 1, data.y[i], u8::from(data.delta[i]))?;
        for j in 0..p {
            write!(out, ",{}", data.x[[i, j]])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read the cohort CSV written by [`write_cohort_csv`].
pub fn read_cohort_csv<R: BufRead>(input: R) -> Result<ObservedData> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| CoxError::Parse("empty cohort file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 4 || cols[0] != "id" || cols[1] != "Y" || cols[2] != "Delta" {
        return Err(CoxError::Parse(
            "cohort header must start with id,Y,Delta,X1".into(),
        ));
    }
    let p = cols.len() - 3;
    let mut y = Vec::new();
    let mut delta = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != cols.len() {
            return Err(CoxError::Parse(format!(
                "row {} has {} fields, expected {}",
                lineno + 2,
                fields.len(),
                cols.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| CoxError::Parse(format!("row {}: {e}", lineno + 2)))
        };
        y.push(parse(fields[1])?);
        let d = parse(fields[2])?;
        delta.push(d != 0.0);
        for f in &fields[3..] {
            xs.push(parse(f)?);
        }
    }
    let n = y.len();
    let x = Array2::from_shape_vec((n, p), xs)
        .map_err(|e| CoxError::Parse(format!("bad matrix shape: {e}")))?;
    Ok(ObservedData { x, y, delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_kappa_zero_is_zero_vector() {
        let cfg = ModelConfig::new(10, 4, 0.0);
        let beta = gen_beta(&cfg, RngStream::new(1, 0));
        assert!(beta.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn beta_renormalization_is_exact() {
        let cfg = ModelConfig::new(10, 4, 1.0);
        let beta = gen_beta(&cfg, RngStream::new(1, 0));
        let norm = beta.dot(&beta).sqrt();
        assert_eq!(norm, 2.0); // kappa * sqrt(p) = 1 * 2
    }

    #[test]
    fn half_sparse_zero_pattern() {
        let mut cfg = ModelConfig::new(10, 4, 1.0);
        cfg.beta_scheme = BetaScheme::HalfSparse;
        let beta = gen_beta(&cfg, RngStream::new(2, 0));
        let zeros = beta.iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, 2);
        assert!(beta[0] != 0.0 && beta[1] != 0.0);
    }

    #[test]
    fn unnormalized_beta_mean_norm_near_kappa() {
        let mut cfg = ModelConfig::new(10, 16, 1.5);
        cfg.renormalize_beta = false;
        let mut acc = 0.0;
        let reps = 1000;
        for r in 0..reps {
            let beta = gen_beta(&cfg, RngStream::new(5, r));
            acc += beta.dot(&beta) / cfg.p as f64;
        }
        let mean = acc / reps as f64;
        let want = cfg.kappa * cfg.kappa;
        assert!((mean - want).abs() < 0.02 * want, "mean {mean} want {want}");
    }

    #[test]
    fn inverse_cdf_transform() {
        // U = exp(-1), rate 1  =>  T = 1
        let t = survival_time_from_uniform((-1.0_f64).exp(), 1.0);
        assert!((t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn assemble_y_delta() {
        let x = Array2::zeros((2, 1));
        let cohort = Cohort::assemble(x, vec![0.5, 3.0], vec![1.3, 1.5]);
        assert_eq!(cohort.y, vec![0.5, 1.5]);
        assert_eq!(cohort.delta, vec![true, false]);
    }

    #[test]
    fn cohort_invariants_hold_exactly() {
        let cfg = ModelConfig::new(200, 10, 1.0);
        let beta = gen_beta(&cfg, RngStream::new(3, 0));
        let cohort = generate_cohort(&cfg, &beta, RngStream::new(3, 1));
        for i in 0..cohort.n() {
            assert_eq!(cohort.y[i], cohort.t[i].min(cohort.c[i]));
            assert_eq!(cohort.delta[i], cohort.t[i] <= cohort.c[i]);
            assert!(cohort.t[i] > 0.0);
            assert!((cfg.censor_lo..=cfg.censor_hi).contains(&cohort.c[i]));
        }
    }

    #[test]
    fn sort_simple_case() {
        let s = SortedCohort::from_observed(&[1.0, 3.0, 2.0], &[true, false, true]);
        assert_eq!(s.order, vec![1, 2, 0]);
        assert_eq!(s.rho, vec![0, 1, 2]);
        assert_eq!(s.uncensored, vec![1, 2]);
    }

    #[test]
    fn tie_puts_censored_first() {
        let s = SortedCohort::from_observed(&[2.0, 2.0], &[true, false]);
        assert_eq!(s.order, vec![1, 0]);
        assert_eq!(s.rho, vec![1, 1]);
        assert_eq!(s.delta, vec![false, true]);
    }

    #[test]
    fn no_ties_means_identity_rho() {
        let s = SortedCohort::from_observed(&[5.0, 1.0, 3.0, 2.0], &[true; 4]);
        for (i, &r) in s.rho.iter().enumerate() {
            assert_eq!(r, i);
        }
    }

    #[test]
    fn sorting_is_idempotent() {
        let y = vec![2.0, 2.0, 1.0, 3.0, 2.0];
        let d = vec![true, false, true, false, true];
        let s1 = SortedCohort::from_observed(&y, &d);
        let s2 = SortedCohort::from_observed(&s1.y, &s1.delta);
        assert_eq!(s1.y, s2.y);
        assert_eq!(s1.delta, s2.delta);
        assert_eq!(s1.rho, s2.rho);
        assert_eq!(s2.order, (0..y.len()).collect::<Vec<_>>());
    }

    #[test]
    fn risk_sets_match_brute_force_with_ties() {
        let mut rng = RngStream::new(11, 0).rng();
        for _ in 0..100 {
            let n = 3 + rng.random_range(0..10);
            // coarse grid injects ties
            let y: Vec<f64> = (0..n).map(|_| (rng.random_range(0..5) as f64) / 2.0 + 0.5).collect();
            let d: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.6).collect();
            let s = SortedCohort::from_observed(&y, &d);
            for i in 0..n {
                let brute: Vec<usize> = (0..n).filter(|&j| s.y[j] >= s.y[i]).collect();
                let from_rho: Vec<usize> = (0..=s.rho[i]).collect();
                assert_eq!(brute, from_rho, "i={i} y={:?}", s.y);
            }
        }
    }

    #[test]
    fn reduced_event_fraction_matches_closed_form() {
        // kappa = 0, lambda = 1, C ~ U[1,2]:
        // P(T <= C) = 1 - int_1^2 exp(-c) dc = 1 - (e^-1 - e^-2) ~ 0.7675
        let cfg = ModelConfig::new(1, 1, 0.0);
        let red = reduce_to_1d(&cfg, 100_000, RngStream::new(13, 0));
        let frac = red.sorted.events() as f64 / red.n() as f64;
        let want = 1.0 - ((-1.0_f64).exp() - (-2.0_f64).exp());
        assert!((frac - want).abs() < 0.01, "frac {frac} want {want}");
    }

    #[test]
    fn kappa_zero_times_independent_of_q() {
        let cfg = ModelConfig::new(1, 1, 0.0);
        let red = reduce_to_1d(&cfg, 5000, RngStream::new(17, 0));
        // correlation between q and y should be near zero
        let n = red.n() as f64;
        let my = red.sorted.y.iter().sum::<f64>() / n;
        let mq = red.q1.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut dy = 0.0;
        let mut dq = 0.0;
        for i in 0..red.n() {
            num += (red.sorted.y[i] - my) * (red.q1[i] - mq);
            dy += (red.sorted.y[i] - my).powi(2);
            dq += (red.q1[i] - mq).powi(2);
        }
        let corr = num / (dy.sqrt() * dq.sqrt());
        assert!(corr.abs() < 0.05, "corr {corr}");
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ModelConfig::new(7, 3, 1.0);
        let beta = gen_beta(&cfg, RngStream::new(19, 0));
        let cohort = generate_cohort(&cfg, &beta, RngStream::new(19, 1));
        let obs = cohort.observed();
        let mut buf = Vec::new();
        write_cohort_csv(&obs, &mut buf).unwrap();
        let back = read_cohort_csv(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back.y, obs.y);
        assert_eq!(back.delta, obs.delta);
        assert_eq!(back.x, obs.x);
    }
}
