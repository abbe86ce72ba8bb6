//! Finite-sample MPLE existence via linear programming over the reduced
//! constraint set, plus a full-constraint brute-force oracle.
//!
//! The estimate exists exactly when no direction `b` satisfies every risk-set
//! difference constraint with at least one strict inequality; the box-bounded
//! LP below has optimal value zero in that case and a positive value
//! otherwise.

pub mod simplex;

use ndarray::Array2;

use crate::error::{CoxError, Result};
use crate::model::SortedCohort;
use crate::numeric::linalg::row_rank;
use simplex::{solve_with_basis, LpProblem};

pub const EXISTENCE_DEFAULT_TOL: f64 = 1e-9;
const LP_ITER_CAP: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Consecutive-difference row from the event chain.
    Chain,
    /// Extra row tying equal uncensored event times together.
    Tie,
}

/// Difference rows `x_{i_l} - x_j` driving the existence LP.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub rows: Vec<Vec<f64>>,
    pub provenance: Vec<RowKind>,
}

impl ConstraintMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rank probe for the span condition; reported separately from the
    /// LP verdict.
    pub fn rank(&self) -> usize {
        row_rank(&self.rows, 1e-10)
    }
}

fn diff_row(x: &Array2<f64>, sorted: &SortedCohort, i: usize, j: usize) -> Vec<f64> {
    let ri = x.row(sorted.order[i]);
    let rj = x.row(sorted.order[j]);
    ri.iter().zip(rj.iter()).map(|(a, b)| a - b).collect()
}

/// Build the reduced constraint set: for each uncensored position `i_l`
/// the chain rows against positions `i_{l-1} .. i_l - 1` (with `i_0` the
/// first position), plus one extra row per adjacent pair of tied events.
/// The transitive closure of these rows recovers every risk-set difference.
pub fn build_reduced_constraints(
    sorted: &SortedCohort,
    x: &Array2<f64>,
) -> Result<ConstraintMatrix> {
    if sorted.uncensored.is_empty() {
        return Err(CoxError::NoEvents);
    }
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    let mut prev = 0usize;
    for &e in &sorted.uncensored {
        for j in prev..e {
            rows.push(diff_row(x, sorted, e, j));
            provenance.push(RowKind::Chain);
        }
        prev = e;
    }
    for group in &sorted.tie_groups {
        for pair in group.windows(2) {
            rows.push(diff_row(x, sorted, pair[0], pair[1]));
            provenance.push(RowKind::Tie);
        }
    }
    debug_assert!(rows.len() <= 2 * (sorted.n().saturating_sub(1)));
    Ok(ConstraintMatrix { rows, provenance })
}

/// Optimal value of
/// `max_{-1 <= b <= 1} sum_r r'b  subject to  r'b >= 0 for every row r`.
///
/// Encoded with split variables `b = b+ - b-` and one surplus per row; the
/// all-surplus basis at the origin is always feasible, so phase 1 is
/// immediate.
pub fn lp_max(constraints: &ConstraintMatrix) -> Result<f64> {
    let m = constraints.rows.len();
    if m == 0 {
        return Ok(0.0);
    }
    let p = constraints.rows[0].len();
    let nvars = 2 * p + m;
    let mut a = Vec::with_capacity(m);
    for (r, row) in constraints.rows.iter().enumerate() {
        // constraints are scale-free, so rows are normalized for conditioning;
        // the objective keeps the original row sums
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        let mut ar = vec![0.0; nvars];
        for (j, &v) in row.iter().enumerate() {
            ar[j] = v * scale;
            ar[p + j] = -v * scale;
        }
        ar[2 * p + r] = -1.0;
        a.push(ar);
    }
    let mut c = vec![0.0; nvars];
    for row in &constraints.rows {
        for (j, &v) in row.iter().enumerate() {
            c[j] += v;
            c[p + j] -= v;
        }
    }
    let lo = vec![0.0; nvars];
    let mut hi = vec![1.0; 2 * p];
    hi.extend(std::iter::repeat_n(f64::INFINITY, m));
    let basis: Vec<usize> = (2 * p..nvars).collect();
    let prob = LpProblem {
        a,
        b: vec![0.0; m],
        c,
        lo,
        hi,
    };
    let sol = solve_with_basis(&prob, &basis, LP_ITER_CAP)?;
    Ok(sol.value.max(0.0))
}

/// Existence verdict on the reduced constraint set: the MPLE exists iff the
/// LP optimum is (numerically) zero.
pub fn mple_exists(sorted: &SortedCohort, x: &Array2<f64>, tol: f64) -> Result<bool> {
    let constraints = build_reduced_constraints(sorted, x)?;
    let value = lp_max(&constraints)?;
    Ok(value <= tol)
}

/// Brute-force oracle over the full constraint set: one row per
/// `(event i, j in risk set of i, j != i)` pair, no reduction. Intended for
/// oracle-scale instances (n of at most a dozen).
pub fn brute_force_exists(sorted: &SortedCohort, x: &Array2<f64>) -> Result<bool> {
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    for &i in &sorted.uncensored {
        for j in 0..=sorted.rho[i] {
            if j == i {
                continue;
            }
            rows.push(diff_row(x, sorted, i, j));
            provenance.push(RowKind::Chain);
        }
    }
    let value = lp_max(&ConstraintMatrix { rows, provenance })?;
    Ok(value <= EXISTENCE_DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SortedCohort;
    use crate::numeric::rng::{normal_sample, RngStream};
    use ndarray::array;
    use rand::Rng;

    fn from_raw(y: &[f64], d: &[bool]) -> SortedCohort {
        SortedCohort::from_observed(y, d)
    }

    #[test]
    fn reduced_rows_all_uncensored() {
        // n=3, all events, already sorted decreasing: rows x2-x1 and x3-x2
        let s = from_raw(&[3.0, 2.0, 1.0], &[true, true, true]);
        let x = array![[0.1], [0.5], [0.9]];
        let cm = build_reduced_constraints(&s, &x).unwrap();
        assert_eq!(cm.len(), 2);
        assert!((cm.rows[0][0] - 0.4).abs() < 1e-15);
        assert!((cm.rows[1][0] - 0.4).abs() < 1e-15);
        assert!(cm.provenance.iter().all(|&k| k == RowKind::Chain));
    }

    #[test]
    fn reduced_rows_first_censored() {
        // Delta = (0,1,1): same two rows
        let s = from_raw(&[3.0, 2.0, 1.0], &[false, true, true]);
        let x = array![[0.1], [0.5], [0.9]];
        let cm = build_reduced_constraints(&s, &x).unwrap();
        assert_eq!(cm.len(), 2);
        // x2 - x1 and x3 - x2
        assert!((cm.rows[0][0] - 0.4).abs() < 1e-15);
        assert!((cm.rows[1][0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn tie_adds_one_row() {
        // events tied at sorted positions 1 and 2 (0-based)
        let s = from_raw(&[3.0, 2.0, 2.0, 1.0], &[true, true, true, true]);
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let cm = build_reduced_constraints(&s, &x).unwrap();
        let ties = cm
            .provenance
            .iter()
            .filter(|&&k| k == RowKind::Tie)
            .count();
        assert_eq!(ties, 1);
        // the tie row is x_{first tied} - x_{second tied} = 1 - 2 = -1
        let tie_idx = cm
            .provenance
            .iter()
            .position(|&k| k == RowKind::Tie)
            .unwrap();
        assert!((cm.rows[tie_idx][0] + 1.0).abs() < 1e-15);
        // chain rows: i_k - 1 + sum (m_l - 1) = 3 + 1
        assert_eq!(cm.len(), 4);
    }

    #[test]
    fn no_events_is_error() {
        let s = from_raw(&[2.0, 1.0], &[false, false]);
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            build_reduced_constraints(&s, &x),
            Err(CoxError::NoEvents)
        ));
    }

    #[test]
    fn lp_single_row() {
        let cm = ConstraintMatrix {
            rows: vec![vec![1.0]],
            provenance: vec![RowKind::Chain],
        };
        let v = lp_max(&cm).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn lp_sign_conflict() {
        let cm = ConstraintMatrix {
            rows: vec![vec![1.0], vec![-0.5]],
            provenance: vec![RowKind::Chain, RowKind::Chain],
        };
        let v = lp_max(&cm).unwrap();
        assert!(v.abs() <= 1e-9, "{v}");
    }

    #[test]
    fn lp_zero_rows() {
        let cm = ConstraintMatrix {
            rows: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            provenance: vec![RowKind::Chain, RowKind::Chain],
        };
        assert_eq!(lp_max(&cm).unwrap(), 0.0);
    }

    #[test]
    fn monotone_two_point_case_does_not_exist() {
        let s = from_raw(&[2.0, 1.0], &[false, true]);
        let x = array![[0.0], [1.0]];
        assert!(!mple_exists(&s, &x, EXISTENCE_DEFAULT_TOL).unwrap());
    }

    #[test]
    fn conflicting_signs_exist() {
        let s = from_raw(&[3.0, 2.0, 1.0], &[true, true, true]);
        let x = array![[0.0], [1.0], [0.5]];
        assert!(mple_exists(&s, &x, EXISTENCE_DEFAULT_TOL).unwrap());
    }

    #[test]
    fn empty_full_set_exists_trivially() {
        // only the largest observation is an event: its risk set is itself
        let s = from_raw(&[2.0, 1.0], &[true, false]);
        let x = array![[0.4], [0.2]];
        assert!(brute_force_exists(&s, &x).unwrap());
        // the reduced set is empty as well
        let cm = build_reduced_constraints(&s, &x).unwrap();
        assert!(cm.is_empty());
        assert!(mple_exists(&s, &x, EXISTENCE_DEFAULT_TOL).unwrap());
    }

    fn random_instance(seed: u64, with_ties: bool) -> (SortedCohort, Array2<f64>) {
        let mut rng = RngStream::new(seed, 0).rng();
        let n = 3 + rng.random_range(0..8);
        let p = 1 + rng.random_range(0..3);
        let y: Vec<f64> = (0..n)
            .map(|_| {
                if with_ties {
                    (rng.random_range(1..5) as f64) * 0.5
                } else {
                    rng.random::<f64>() * 3.0 + 0.1
                }
            })
            .collect();
        let mut d: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
        if !d.iter().any(|&v| v) {
            d[0] = true;
        }
        let xv = normal_sample(RngStream::new(seed, 1), n * p);
        let x = Array2::from_shape_vec((n, p), xv).unwrap();
        (SortedCohort::from_observed(&y, &d), x)
    }

    #[test]
    fn reduced_equals_full_verdict() {
        for seed in 0..200 {
            let (s, x) = random_instance(1000 + seed, seed % 2 == 0);
            let reduced = mple_exists(&s, &x, EXISTENCE_DEFAULT_TOL).unwrap();
            let full = brute_force_exists(&s, &x).unwrap();
            assert_eq!(reduced, full, "verdicts differ on seed {seed}");
        }
    }

    #[test]
    fn lp_value_invariances() {
        for seed in 0..40 {
            let (s, x) = random_instance(3000 + seed, false);
            let cm = build_reduced_constraints(&s, &x).unwrap();
            if cm.is_empty() {
                continue;
            }
            let v = lp_max(&cm).unwrap();

            // positive row rescaling
            let mut rng = RngStream::new(4000 + seed, 0).rng();
            let scaled = ConstraintMatrix {
                rows: cm
                    .rows
                    .iter()
                    .map(|r| {
                        let f = 0.5 + rng.random::<f64>() * 3.0;
                        r.iter().map(|&x| x * f).collect()
                    })
                    .collect(),
                provenance: cm.provenance.clone(),
            };
            let vs = lp_max(&scaled).unwrap();
            assert_eq!(v <= 1e-9, vs <= 1e-9, "rescaling changed the verdict");

            // row permutation leaves the value unchanged
            let mut rows = cm.rows.clone();
            rows.reverse();
            let perm = ConstraintMatrix {
                rows,
                provenance: cm.provenance.clone(),
            };
            let vp = lp_max(&perm).unwrap();
            assert!((v - vp).abs() < 1e-7, "permutation changed value: {v} vs {vp}");

            // negating all rows mirrors the feasible box: value unchanged
            let neg = ConstraintMatrix {
                rows: cm
                    .rows
                    .iter()
                    .map(|r| r.iter().map(|&x| -x).collect())
                    .collect(),
                provenance: cm.provenance.clone(),
            };
            let vn = lp_max(&neg).unwrap();
            assert!((v - vn).abs() < 1e-7, "negation changed value: {v} vs {vn}");
        }
    }

    #[test]
    fn adding_rows_never_increases_value() {
        // monotonicity in the constraint set: held at a fixed objective, a
        // shrinking feasible region cannot raise the optimum
        for seed in 0..40 {
            let (s, x) = random_instance(5000 + seed, false);
            let cm = build_reduced_constraints(&s, &x).unwrap();
            if cm.len() < 2 {
                continue;
            }
            let head_rows = cm.rows[..cm.len() - 1].to_vec();
            let v_head = lp_value_with_objective(&head_rows, &cm.rows);
            let v_full = lp_value_with_objective(&cm.rows, &cm.rows);
            assert!(v_full <= v_head + 1e-7, "seed {seed}: {v_full} > {v_head}");
        }
    }

    /// max of sum over `obj_rows` of r'b over the region cut by `feas_rows`.
    fn lp_value_with_objective(feas_rows: &[Vec<f64>], obj_rows: &[Vec<f64>]) -> f64 {
        let m = feas_rows.len();
        let p = feas_rows[0].len();
        let nvars = 2 * p + m;
        let mut a = Vec::with_capacity(m);
        for (r, row) in feas_rows.iter().enumerate() {
            let mut ar = vec![0.0; nvars];
            for (j, &v) in row.iter().enumerate() {
                ar[j] = v;
                ar[p + j] = -v;
            }
            ar[2 * p + r] = -1.0;
            a.push(ar);
        }
        let mut c = vec![0.0; nvars];
        for row in obj_rows {
            for (j, &v) in row.iter().enumerate() {
                c[j] += v;
                c[p + j] -= v;
            }
        }
        let mut hi = vec![1.0; 2 * p];
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));
        let prob = LpProblem {
            a,
            b: vec![0.0; m],
            c,
            lo: vec![0.0; nvars],
            hi,
        };
        let basis: Vec<usize> = (2 * p..nvars).collect();
        solve_with_basis(&prob, &basis, LP_ITER_CAP).unwrap().value
    }

    #[test]
    fn rank_probe_reports() {
        let cm = ConstraintMatrix {
            rows: vec![vec![1.0, 0.0], vec![2.0, 0.0]],
            provenance: vec![RowKind::Chain, RowKind::Chain],
        };
        assert_eq!(cm.rank(), 1);
    }
}
