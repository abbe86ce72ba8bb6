//! Scalar root finding and one-dimensional extremum search.

use crate::error::{CoxError, Result};

/// Bisection root solve on a bracketing interval.
///
/// Stops when `|f(root)| <= tol` or the bracket width drops below `tol`.
/// A non-bracketing interval is a distinct error.
pub fn solve_scalar_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    assert!(tol > 0.0);
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(CoxError::NonBracketing { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid.abs() <= tol || hi - lo <= tol {
            return Ok(mid);
        }
        if flo * fmid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Golden-section search for an extremum of a unimodal function on [lo, hi].
///
/// Returns `(x*, f(x*))`. Non-unimodal input yields a local extremum.
pub fn golden_section_extremum<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    sense: Sense,
) -> (f64, f64) {
    assert!(lo < hi, "golden section needs lo < hi");
    let sign = match sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let inv_phi2 = 1.0 - inv_phi;
    let (mut a, mut b) = (lo, hi);
    let mut c = a + inv_phi2 * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sign * f(c);
    let mut fd = sign * f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = a + inv_phi2 * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sign * f(d);
        }
    }
    let x = if fc < fd { c } else { d };
    let fx = if fc < fd { fc } else { fd };
    (x, sign * fx)
}
