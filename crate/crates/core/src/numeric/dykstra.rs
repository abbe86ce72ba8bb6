//! Projection onto an intersection of homogeneous halfspaces by Dykstra's
//! alternating-projection scheme.
//!
//! The constraint set is a closed convex cone described by rows `a_k`
//! (each defines `{m : a_k' m >= 0}`) and equality pairs (handled as two
//! opposing halfspaces). Rows are stored sparsely; the order-cone rows used
//! elsewhere in the crate have two nonzeros each, which makes a full Dykstra
//! sweep O(nnz) instead of O(rows * n).

use crate::error::{CoxError, Result};

/// One halfspace `{m : sum_i coef_i * m_i >= 0}` in sparse form.
#[derive(Debug, Clone)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
    norm_sq: f64,
}

impl SparseRow {
    pub fn new(entries: Vec<(usize, f64)>) -> Self {
        let norm_sq = entries.iter().map(|(_, v)| v * v).sum();
        Self { entries, norm_sq }
    }

    pub fn from_dense(row: &[f64]) -> Self {
        Self::new(
            row.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        )
    }

    fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, c)| c * x[i]).sum()
    }

    fn max_index(&self) -> usize {
        self.entries.iter().map(|&(i, _)| i).max().unwrap_or(0)
    }
}

/// A closed convex cone given by halfspace rows and equality pairs.
#[derive(Debug, Clone, Default)]
pub struct HalfspaceSet {
    pub dim: usize,
    pub rows: Vec<SparseRow>,
    pub equalities: Vec<(usize, usize)>,
}

impl HalfspaceSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn from_dense_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut set = Self::new(dim);
        for r in rows {
            set.push_dense_row(r)?;
        }
        Ok(set)
    }

    pub fn push_dense_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(CoxError::InvalidArgument(format!(
                "row has dimension {}, expected {}",
                row.len(),
                self.dim
            )));
        }
        self.rows.push(SparseRow::from_dense(row));
        Ok(())
    }

    pub fn push_sparse_row(&mut self, entries: Vec<(usize, f64)>) -> Result<()> {
        let row = SparseRow::new(entries);
        if row.max_index() >= self.dim && !row.entries.is_empty() {
            return Err(CoxError::InvalidArgument(
                "sparse row index out of range".into(),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_equality(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.dim || j >= self.dim || i == j {
            return Err(CoxError::InvalidArgument(format!(
                "equality pair ({i}, {j}) out of range for dimension {}",
                self.dim
            )));
        }
        self.equalities.push((i, j));
        Ok(())
    }

    /// All constraints as halfspaces, equalities expanded into opposing pairs.
    fn expanded(&self) -> Vec<SparseRow> {
        let mut all = self.rows.clone();
        for &(i, j) in &self.equalities {
            all.push(SparseRow::new(vec![(i, 1.0), (j, -1.0)]));
            all.push(SparseRow::new(vec![(i, -1.0), (j, 1.0)]));
        }
        all.retain(|r| r.norm_sq > 0.0);
        all
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub point: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Worst normalized constraint violation at exit.
    pub max_violation: f64,
}

pub const DYKSTRA_DEFAULT_TOL: f64 = 1e-8;
pub const DYKSTRA_DEFAULT_MAX_ITER: usize = 50_000;

/// Project `z` onto the cone described by `set`.
///
/// The result satisfies feasibility, the polar decomposition orthogonality
/// `<z - m, m> ~ 0` and the Pythagorean identity up to `tol * (1 + |z|^2)`.
/// Non-convergence within `max_iter` sweeps returns the best iterate with
/// `converged = false`.
pub fn dykstra_project(
    z: &[f64],
    set: &HalfspaceSet,
    tol: f64,
    max_iter: usize,
) -> Result<Projection> {
    if z.len() != set.dim {
        return Err(CoxError::InvalidArgument(format!(
            "point has dimension {}, expected {}",
            z.len(),
            set.dim
        )));
    }
    let rows = set.expanded();
    if rows.is_empty() {
        return Ok(Projection {
            point: z.to_vec(),
            iterations: 0,
            converged: true,
            max_violation: 0.0,
        });
    }

    let z_sq: f64 = z.iter().map(|v| v * v).sum();
    let scale = tol * (1.0 + z_sq);
    let mut x = z.to_vec();
    // Dykstra correction for a halfspace projection is a multiple of its
    // normal, so one scalar per constraint suffices.
    let mut corr = vec![0.0_f64; rows.len()];

    for sweep in 1..=max_iter {
        for (k, row) in rows.iter().enumerate() {
            // w = x + correction_k
            let c = corr[k];
            if c != 0.0 {
                for &(i, v) in &row.entries {
                    x[i] += c * v;
                }
            }
            let theta = row.dot(&x) / row.norm_sq;
            if theta >= 0.0 {
                corr[k] = 0.0;
            } else {
                corr[k] = theta;
                for &(i, v) in &row.entries {
                    x[i] -= theta * v;
                }
            }
        }

        // exit checks, all O(n + nnz)
        let mut viol = 0.0_f64;
        for row in &rows {
            let d = row.dot(&x);
            if d < 0.0 {
                viol = viol.max(-d / row.norm_sq.sqrt());
            }
        }
        let inner: f64 = z.iter().zip(&x).map(|(zi, xi)| (zi - xi) * xi).sum();
        if viol <= tol && inner.abs() <= scale {
            return Ok(Projection {
                point: x,
                iterations: sweep,
                converged: true,
                max_violation: viol,
            });
        }
    }

    let mut viol = 0.0_f64;
    for row in &rows {
        let d = row.dot(&x);
        if d < 0.0 {
            viol = viol.max(-d / row.norm_sq.sqrt());
        }
    }
    Ok(Projection {
        point: x,
        iterations: max_iter,
        converged: false,
        max_violation: viol,
    })
}
