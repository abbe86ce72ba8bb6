//! Corrected high-dimensional tests, classical comparisons, and the
//! distribution-fit statistics used to verify uniformity claims.

use serde::Serialize;

use crate::error::{CoxError, Result};
use crate::numeric::special::{chi_square_cdf, normal_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    CorrectedZ,
    CorrectedChi2,
    ClassicalZ,
    ClassicalLrt,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub kind: TestKind,
    pub dof: Option<u32>,
}

/// Two-sided p-values `2 Phi(-|beta_j / b*|)` for null coordinates.
pub fn corrected_pvalues(beta_hat_coords: &[f64], b_star: f64) -> Result<Vec<f64>> {
    if b_star <= 0.0 {
        return Err(CoxError::InvalidArgument("b* must be positive".into()));
    }
    Ok(beta_hat_coords
        .iter()
        .map(|&b| 2.0 * normal_cdf(-(b / b_star).abs()))
        .collect())
}

/// Wald statistic `sum_j (beta_j / b*)^2` against the chi-square with
/// `|S|` degrees of freedom.
pub fn wald_chi2(beta_hat_s: &[f64], b_star: f64) -> Result<TestReport> {
    if beta_hat_s.is_empty() {
        return Err(CoxError::InvalidArgument(
            "the null coordinate set is empty".into(),
        ));
    }
    if b_star <= 0.0 {
        return Err(CoxError::InvalidArgument("b* must be positive".into()));
    }
    let statistic: f64 = beta_hat_s.iter().map(|&b| (b / b_star).powi(2)).sum();
    let dof = beta_hat_s.len() as u32;
    Ok(TestReport {
        statistic,
        p_value: 1.0 - chi_square_cdf(statistic, dof),
        kind: TestKind::CorrectedChi2,
        dof: Some(dof),
    })
}

/// Empirical bias factor and residual spread:
/// `a_hat = <beta_hat, beta*> / |beta*|^2`, the least-squares coefficient of
/// `beta_hat` on `beta*`, and `b_hat = |beta_hat - a_hat beta*| / sqrt(p)`.
pub fn empirical_ab(beta_hat: &[f64], beta_true: &[f64]) -> Result<(f64, f64)> {
    if beta_hat.len() != beta_true.len() {
        return Err(CoxError::InvalidArgument(
            "coefficient vectors differ in length".into(),
        ));
    }
    let norm_sq: f64 = beta_true.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(CoxError::InvalidArgument("beta* must be nonzero".into()));
    }
    let a_hat = beta_hat
        .iter()
        .zip(beta_true)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / norm_sq;
    let p = beta_hat.len() as f64;
    let resid_sq: f64 = beta_hat
        .iter()
        .zip(beta_true)
        .map(|(bh, bt)| {
            let r = bh - a_hat * bt;
            r * r
        })
        .sum();
    Ok((a_hat, (resid_sq / p).sqrt()))
}

/// Kolmogorov-Smirnov distance of a sample in [0,1] from the uniform CDF:
/// `D = max_i max(i/m - u_(i), u_(i) - (i-1)/m)`.
pub fn ks_uniform_stat(pvals: &[f64]) -> Result<f64> {
    if pvals.is_empty() {
        return Err(CoxError::InvalidArgument("empty p-value sample".into()));
    }
    if pvals.iter().any(|&u| !(0.0..=1.0).contains(&u)) {
        return Err(CoxError::InvalidArgument(
            "p-values must lie in [0, 1]".into(),
        ));
    }
    let mut sorted = pvals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &u) in sorted.iter().enumerate() {
        let hi = (i as f64 + 1.0) / m - u;
        let lo = u - i as f64 / m;
        d = d.max(hi).max(lo);
    }
    Ok(d)
}
