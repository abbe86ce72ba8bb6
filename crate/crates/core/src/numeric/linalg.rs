//! Small dense linear algebra: Cholesky solve/inverse for SPD systems and
//! Gaussian elimination for general square systems.

use crate::error::{CoxError, Result};
use ndarray::{Array1, Array2};

/// Cholesky factor (lower triangular) of a symmetric positive definite matrix.
fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoxError::InvalidArgument("matrix must be square".into()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(CoxError::SingularInformation);
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve `A x = b` for SPD `A`.
pub fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(a)?;
    let n = b.len();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Ok(x)
}

/// Inverse of an SPD matrix via its Cholesky factor.
pub fn cholesky_inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    let l = cholesky(a)?;
    let n = a.nrows();
    // invert L in place
    let mut li = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        li[[i, i]] = 1.0 / l[[i, i]];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s -= l[[i, k]] * li[[k, j]];
            }
            li[[i, j]] = s / l[[i, i]];
        }
    }
    // A^{-1} = L^{-T} L^{-1}
    let mut inv = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..n {
                s += li[[k, i]] * li[[k, j]];
            }
            inv[[i, j]] = s;
            inv[[j, i]] = s;
        }
    }
    Ok(inv)
}

/// Solve a general square system by Gaussian elimination with partial
/// pivoting. Used by small verification oracles.
pub fn gauss_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(CoxError::InvalidArgument("dimension mismatch".into()));
    }
    let mut m = a.clone();
    let mut rhs = b.clone();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[[r, col]].abs() > m[[piv, col]].abs() {
                piv = r;
            }
        }
        if m[[piv, col]].abs() < 1e-13 {
            return Err(CoxError::SingularInformation);
        }
        if piv != col {
            for c in 0..n {
                m.swap([col, c], [piv, c]);
            }
            rhs.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = m[[r, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[[r, c]] -= f * m[[col, c]];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for c in (i + 1)..n {
            s -= m[[i, c]] * x[c];
        }
        x[i] = s / m[[i, i]];
    }
    Ok(x)
}

/// Rank of a matrix whose rows are given as dense vectors, by row reduction.
pub fn row_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let p = rows[0].len();
    let mut work: Vec<Vec<f64>> = rows.to_vec();
    let mut rank = 0;
    let mut col = 0;
    while rank < work.len() && col < p {
        let mut piv = rank;
        for r in rank..work.len() {
            if work[r][col].abs() > work[piv][col].abs() {
                piv = r;
            }
        }
        if work[piv][col].abs() <= tol {
            col += 1;
            continue;
        }
        work.swap(rank, piv);
        for r in (rank + 1)..work.len() {
            let f = work[r][col] / work[rank][col];
            if f != 0.0 {
                for c in col..p {
                    let v = work[rank][c];
                    work[r][c] -= f * v;
                }
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}
