//! Dense primal simplex with variable bounds.
//!
//! Solves  maximize c'x  subject to  A x = b,  lo <= x <= hi
//! on a dense tableau carrying the reduced-cost row. Pricing starts with
//! Dantzig's rule and switches permanently to Bland's smallest-index rule
//! after a long degenerate streak, so the method is fast on typical
//! instances yet still terminates finitely. Phase 1 (artificial variables)
//! runs only when the caller cannot provide a feasible starting basis.
//!
//! After optimality the basic values are recomputed exactly from the
//! original constraint columns, which removes the drift a long pivot
//! sequence leaves in the tableau.

use crate::error::{CoxError, Result};

pub const LP_FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before randomized pricing kicks in.
const RANDOM_TRIGGER: usize = 25;
/// Consecutive degenerate pivots before the Bland's-rule guarantee takes
/// over for good.
const BLAND_TRIGGER: usize = 20_000;

#[derive(Debug, Clone)]
pub struct LpProblem {
    /// Row-major m x n constraint matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize), // row index
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    n: usize,
    /// (m + 1) x n row-major: B^{-1} A on top, reduced costs in the last row.
    t: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.n + c]
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(r) => self.xb[r],
            VarState::AtLower => self.lo[j],
            VarState::AtUpper => self.hi[j],
        }
    }

    /// Fill the reduced-cost row for objective `c`: d_j = c_j - c_B' T_j.
    fn set_objective(&mut self, c: &[f64]) {
        let n = self.n;
        for j in 0..n {
            self.t[self.m * n + j] = c[j];
        }
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = c[bj];
            if cb == 0.0 {
                continue;
            }
            for j in 0..n {
                let v = self.at(r, j);
                if v != 0.0 {
                    self.t[self.m * n + j] -= cb * v;
                }
            }
        }
    }

    /// Gauss-Jordan pivot: variable `j` enters the basis in row `r`. The
    /// reduced-cost row is updated like any other row, which keeps d_basic = 0.
    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let piv = self.at(r, j);
        let inv = 1.0 / piv;
        for col in 0..n {
            self.t[r * n + col] *= inv;
        }
        for row in 0..=self.m {
            if row == r {
                continue;
            }
            let f = self.at(row, j);
            if f == 0.0 {
                continue;
            }
            for col in 0..n {
                let v = self.at(r, col);
                self.t[row * n + col] -= f * v;
            }
        }
        self.basis[r] = j;
    }

    fn entering_dantzig(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None; // (j, d, merit)
        for j in 0..self.n {
            let d = self.at(self.m, j);
            let merit = match self.state[j] {
                VarState::AtLower if d > LP_FEAS_TOL => d,
                VarState::AtUpper if d < -LP_FEAS_TOL => -d,
                _ => continue,
            };
            match best {
                Some((_, _, m)) if merit <= m => {}
                _ => best = Some((j, d, merit)),
            }
        }
        best.map(|(j, d, _)| (j, d))
    }

    fn entering_bland(&self) -> Option<(usize, f64)> {
        for j in 0..self.n {
            let d = self.at(self.m, j);
            let improving = match self.state[j] {
                VarState::AtLower => d > LP_FEAS_TOL,
                VarState::AtUpper => d < -LP_FEAS_TOL,
                VarState::Basic(_) => false,
            };
            if improving {
                return Some((j, d));
            }
        }
        None
    }

    /// One simplex phase on the objective already loaded in the reduced-cost
    /// row. Errs when the iteration cap is exceeded.
    fn run(&mut self, max_iter: usize) -> Result<()> {
        let mut degenerate_streak = 0usize;
        loop {
            if self.iterations > max_iter {
                return Err(CoxError::LpFailure(
                    "cycling guard exceeded in simplex".into(),
                ));
            }
            self.iterations += 1;

            let entering = if degenerate_streak > BLAND_TRIGGER {
                self.entering_bland()
            } else {
                self.entering_dantzig()
            };
            let Some((j, d)) = entering else {
                return Ok(()); // optimal
            };
            let sigma = if d > 0.0 { 1.0 } else { -1.0 };

            // ratio test: a basic variable hits a bound, or the entering
            // variable flips to its opposite bound
            let own_range = self.hi[j] - self.lo[j];
            let mut t_star = own_range;
            let mut leaving: Option<usize> = None;
            for r in 0..self.m {
                let y = self.at(r, j);
                if y.abs() <= PIVOT_TOL {
                    continue;
                }
                let bv = self.basis[r];
                let delta = -sigma * y;
                let limit = if delta < 0.0 {
                    if self.lo[bv].is_finite() {
                        (self.xb[r] - self.lo[bv]) / -delta
                    } else {
                        f64::INFINITY
                    }
                } else if self.hi[bv].is_finite() {
                    (self.hi[bv] - self.xb[r]) / delta
                } else {
                    f64::INFINITY
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    None => limit < t_star - 1e-15,
                    Some(cur) => {
                        limit < t_star - 1e-15
                            || (limit <= t_star + 1e-15 && self.basis[r] < self.basis[cur])
                    }
                };
                if better {
                    t_star = limit;
                    leaving = Some(r);
                }
            }

            if t_star.is_infinite() {
                return Err(CoxError::LpFailure("objective unbounded".into()));
            }
            if t_star <= 1e-13 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            match leaving {
                None => {
                    // bound flip
                    for r in 0..self.m {
                        self.xb[r] -= sigma * self.at(r, j) * t_star;
                    }
                    self.state[j] = match self.state[j] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        VarState::Basic(_) => unreachable!(),
                    };
                }
                Some(r) => {
                    let new_val = self.value_of(j) + sigma * t_star;
                    for row in 0..self.m {
                        self.xb[row] -= sigma * self.at(row, j) * t_star;
                    }
                    let old = self.basis[r];
                    let delta = -sigma * self.at(r, j);
                    self.state[old] = if delta < 0.0 {
                        VarState::AtLower
                    } else {
                        VarState::AtUpper
                    };
                    self.pivot(r, j);
                    self.state[j] = VarState::Basic(r);
                    self.xb[r] = new_val;
                }
            }
        }
    }

    /// Recompute the basic values exactly from the original problem by one
    /// dense solve of B xB = b - N x_N, eliminating accumulated pivot drift.
    fn repolish(&mut self, prob: &LpProblem) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let w = m + 1;
        let mut aug = vec![0.0; m * w];
        for r in 0..m {
            let mut rhs = prob.b[r];
            for j in 0..self.n {
                match self.state[j] {
                    VarState::Basic(_) => {}
                    VarState::AtLower => rhs -= prob.a[r][j] * self.lo[j],
                    VarState::AtUpper => rhs -= prob.a[r][j] * self.hi[j],
                }
            }
            for (k, &bj) in self.basis.iter().enumerate() {
                aug[r * w + k] = prob.a[r][bj];
            }
            aug[r * w + m] = rhs;
        }
        // Gaussian elimination with partial pivoting
        for col in 0..m {
            let mut piv = col;
            for r in (col + 1)..m {
                if aug[r * w + col].abs() > aug[piv * w + col].abs() {
                    piv = r;
                }
            }
            if aug[piv * w + col].abs() < 1e-13 {
                // basis numerically singular: leave tableau values in place
                return Ok(());
            }
            if piv != col {
                for cc in 0..w {
                    aug.swap(col * w + cc, piv * w + cc);
                }
            }
            for r in (col + 1)..m {
                let f = aug[r * w + col] / aug[col * w + col];
                if f == 0.0 {
                    continue;
                }
                for cc in col..w {
                    aug[r * w + cc] -= f * aug[col * w + cc];
                }
            }
        }
        let mut xb = vec![0.0; m];
        for r in (0..m).rev() {
            let mut s = aug[r * w + m];
            for cc in (r + 1)..m {
                s -= aug[r * w + cc] * xb[cc];
            }
            xb[r] = s / aug[r * w + r];
        }
        self.xb = xb;
        Ok(())
    }
}

/// Solve with a caller-supplied starting basis whose basic values are
/// feasible when all nonbasic variables sit at their lower bounds.
pub fn solve_with_basis(prob: &LpProblem, basis: &[usize], max_iter: usize) -> Result<LpSolution> {
    let m = prob.a.len();
    let n = prob.c.len();
    if basis.len() != m {
        return Err(CoxError::InvalidArgument(
            "basis size must equal the row count".into(),
        ));
    }
    if m == 0 {
        let x: Vec<f64> = prob.lo.clone();
        let value = dot(&prob.c, &x);
        return Ok(LpSolution {
            x,
            value,
            iterations: 0,
        });
    }

    // Gauss-Jordan on [A | b] turns the basis columns into the identity;
    // the last column then holds B^{-1} b.
    let w = n + 1;
    let mut aug = vec![0.0; m * w];
    for (r, row) in prob.a.iter().enumerate() {
        aug[r * w..r * w + n].copy_from_slice(row);
        aug[r * w + n] = prob.b[r];
    }
    for (r, &j) in basis.iter().enumerate() {
        let mut pr = r;
        while pr < m && aug[pr * w + j].abs() <= PIVOT_TOL {
            pr += 1;
        }
        if pr == m {
            return Err(CoxError::LpFailure("supplied basis is singular".into()));
        }
        if pr != r {
            for col in 0..w {
                aug.swap(r * w + col, pr * w + col);
            }
        }
        let inv = 1.0 / aug[r * w + j];
        for col in 0..w {
            aug[r * w + col] *= inv;
        }
        for row in 0..m {
            if row == r {
                continue;
            }
            let f = aug[row * w + j];
            if f == 0.0 {
                continue;
            }
            for col in 0..w {
                let v = aug[r * w + col];
                aug[row * w + col] -= f * v;
            }
        }
    }

    let mut t = vec![0.0; (m + 1) * n];
    let mut binv_b = vec![0.0; m];
    for r in 0..m {
        t[r * n..(r + 1) * n].copy_from_slice(&aug[r * w..r * w + n]);
        binv_b[r] = aug[r * w + n];
    }
    let mut state = vec![VarState::AtLower; n];
    for (r, &j) in basis.iter().enumerate() {
        state[j] = VarState::Basic(r);
    }
    let mut tab = Tableau {
        m,
        n,
        t,
        basis: basis.to_vec(),
        state,
        lo: prob.lo.clone(),
        hi: prob.hi.clone(),
        xb: vec![0.0; m],
        iterations: 0,
    };
    for r in 0..m {
        let mut v = binv_b[r];
        for j in 0..n {
            if matches!(tab.state[j], VarState::Basic(_)) {
                continue;
            }
            let lo = prob.lo[j];
            if lo != 0.0 {
                v -= tab.at(r, j) * lo;
            }
        }
        tab.xb[r] = v;
    }
    for r in 0..m {
        let bv = tab.basis[r];
        if tab.xb[r] < prob.lo[bv] - LP_FEAS_TOL || tab.xb[r] > prob.hi[bv] + LP_FEAS_TOL {
            return Err(CoxError::LpFailure(
                "supplied starting basis is infeasible".into(),
            ));
        }
    }

    tab.set_objective(&prob.c);
    tab.run(max_iter)?;
    tab.repolish(prob)?;

    let x: Vec<f64> = (0..n).map(|j| tab.value_of(j)).collect();
    let value = dot(&prob.c, &x);
    Ok(LpSolution {
        x,
        value,
        iterations: tab.iterations,
    })
}

/// Two-phase solve: phase 1 minimizes the sum of artificial variables to find
/// a feasible basis, phase 2 optimizes the true objective.
pub fn solve(prob: &LpProblem, max_iter: usize) -> Result<LpSolution> {
    let m = prob.a.len();
    let n = prob.c.len();
    if m == 0 {
        return solve_with_basis(prob, &[], max_iter);
    }
    // shift variables to their lower bounds and add artificials signed so
    // the artificial basis starts feasible
    let mut a = Vec::with_capacity(m);
    let mut lo = prob.lo.clone();
    let mut hi = prob.hi.clone();
    let mut c1 = vec![0.0; n + m];
    let mut basis = Vec::with_capacity(m);
    for (r, row) in prob.a.iter().enumerate() {
        let mut resid = prob.b[r];
        for (j, &v) in row.iter().enumerate() {
            if !prob.lo[j].is_finite() {
                return Err(CoxError::LpFailure(
                    "two-phase path requires finite lower bounds".into(),
                ));
            }
            resid -= v * prob.lo[j];
        }
        let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
        let mut ext = row.clone();
        ext.extend(std::iter::repeat_n(0.0, m));
        ext[n + r] = sign;
        a.push(ext);
        basis.push(n + r);
        c1[n + r] = -1.0; // maximize -(sum of artificials)
    }
    lo.extend(std::iter::repeat_n(0.0, m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, m));
    let phase1 = LpProblem {
        a,
        b: prob.b.clone(),
        c: c1,
        lo,
        hi,
    };
    let sol1 = solve_with_basis(&phase1, &basis, max_iter)?;
    let art_sum: f64 = sol1.x[n..].iter().sum();
    if art_sum > 1e-7 {
        return Err(CoxError::LpFailure("problem is infeasible".into()));
    }
    // phase 2 on the same extended problem with a heavy penalty keeping
    // artificials at zero; adequate for the small dense problems that take
    // this path (the cone LPs always supply a natural starting basis)
    let mut c2 = prob.c.clone();
    c2.extend(std::iter::repeat_n(-1e12, m));
    let phase2 = LpProblem {
        a: phase1.a.clone(),
        b: phase1.b.clone(),
        c: c2,
        lo: phase1.lo.clone(),
        hi: phase1.hi.clone(),
    };
    let sol2 = solve_with_basis(&phase2, &basis, max_iter)?;
    let x: Vec<f64> = sol2.x[..n].to_vec();
    let value = dot(&prob.c, &x);
    Ok(LpSolution {
        x,
        value,
        iterations: sol1.iterations + sol2.iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_lp_with_equalities() {
        // max x + y s.t. x + y + s = 1, 0 <= x,y <= 1, s >= 0 -> 1
        let prob = LpProblem {
            a: vec![vec![1.0, 1.0, 1.0]],
            b: vec![1.0],
            c: vec![1.0, 1.0, 0.0],
            lo: vec![0.0, 0.0, 0.0],
            hi: vec![1.0, 1.0, f64::INFINITY],
        };
        let sol = solve_with_basis(&prob, &[2], 10_000).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9, "{sol:?}");
    }

    #[test]
    fn two_phase_simple() {
        // max 2x + 3y s.t. x + y = 4, x - y = 2, 0 <= x,y <= 10
        let prob = LpProblem {
            a: vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            b: vec![4.0, 2.0],
            c: vec![2.0, 3.0],
            lo: vec![0.0, 0.0],
            hi: vec![10.0, 10.0],
        };
        let sol = solve(&prob, 10_000).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-8);
        assert!((sol.x[1] - 1.0).abs() < 1e-8);
        assert!((sol.value - 9.0).abs() < 1e-8);
    }

    #[test]
    fn two_phase_detects_infeasible() {
        let prob = LpProblem {
            a: vec![vec![1.0]],
            b: vec![-1.0],
            c: vec![0.0],
            lo: vec![0.0],
            hi: vec![1.0],
        };
        assert!(matches!(solve(&prob, 1000), Err(CoxError::LpFailure(_))));
    }

    #[test]
    fn bound_flip_path() {
        // max x - y with x + y = 1, x in [0, 0.25], y in [0, 2]
        let prob = LpProblem {
            a: vec![vec![1.0, 1.0]],
            b: vec![1.0],
            c: vec![1.0, -1.0],
            lo: vec![0.0, 0.0],
            hi: vec![0.25, 2.0],
        };
        let sol = solve(&prob, 1000).unwrap();
        assert!((sol.x[0] - 0.25).abs() < 1e-9);
        assert!((sol.x[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn repolish_satisfies_constraints_exactly() {
        // random-ish degenerate cone LP; the returned point must satisfy
        // A x = b to near machine precision after the final re-solve
        let rows = vec![
            vec![1.0, -0.5, 0.2, -1.0, 0.0],
            vec![0.3, 0.8, -0.7, 0.0, -1.0],
        ];
        let prob = LpProblem {
            a: rows.clone(),
            b: vec![0.0, 0.0],
            c: vec![1.3, 0.3, -0.5, 0.0, 0.0],
            lo: vec![0.0; 5],
            hi: vec![1.0, 1.0, 1.0, f64::INFINITY, f64::INFINITY],
        };
        let sol = solve_with_basis(&prob, &[3, 4], 10_000).unwrap();
        for row in &rows {
            let resid: f64 = row.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
            assert!(resid.abs() < 1e-10, "{resid}");
        }
    }
}
