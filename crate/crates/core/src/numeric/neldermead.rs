//! Nelder–Mead simplex minimization on R^d.

use crate::error::{CoxError, Result};

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0`.
///
/// The initial simplex places one vertex at `x0` and perturbs each coordinate
/// by `step`. Convergence is declared when the simplex diameter falls below
/// `tol`. A non-finite objective value at any probe point aborts with a
/// diagnostic carrying the offending point.
pub fn nelder_mead_min<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_iter: usize,
) -> Result<NelderMeadResult> {
    let d = x0.len();
    assert!(d >= 1);
    let mut eval = |x: &[f64]| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CoxError::NonFiniteProbe(x.to_vec()))
        }
    };

    // vertices and values
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    verts.push(x0.to_vec());
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += if step != 0.0 { step } else { 0.1 };
        verts.push(v);
    }
    let mut fv: Vec<f64> = Vec::with_capacity(d + 1);
    for v in &verts {
        fv.push(eval(v)?);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        // order vertices by value
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap());
        let ordered: Vec<Vec<f64>> = idx.iter().map(|&i| verts[i].clone()).collect();
        let ofv: Vec<f64> = idx.iter().map(|&i| fv[i]).collect();
        verts = ordered;
        fv = ofv;

        // simplex diameter
        let mut diam = 0.0_f64;
        for i in 0..=d {
            for j in (i + 1)..=d {
                let dist: f64 = verts[i]
                    .iter()
                    .zip(&verts[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                diam = diam.max(dist);
            }
        }
        if diam <= tol {
            converged = true;
            break;
        }

        // centroid of all but worst
        let mut centroid = vec![0.0; d];
        for v in verts.iter().take(d) {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let worst = fv[d];
        let second_worst = fv[d - 1];
        let best = fv[0];

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&verts[d])
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let fr = eval(&reflect)?;

        if fr < best {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&verts[d])
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let fe = eval(&expand)?;
            if fe < fr {
                verts[d] = expand;
                fv[d] = fe;
            } else {
                verts[d] = reflect;
                fv[d] = fr;
            }
        } else if fr < second_worst {
            verts[d] = reflect;
            fv[d] = fr;
        } else {
            // contraction; accept outside if no worse than the reflection,
            // inside if strictly better than the worst vertex
            let accepted = if fr < worst {
                let outside: Vec<f64> = centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + rho * (r - c))
                    .collect();
                let fo = eval(&outside)?;
                if fo <= fr {
                    verts[d] = outside;
                    fv[d] = fo;
                    true
                } else {
                    false
                }
            } else {
                let inside: Vec<f64> = centroid
                    .iter()
                    .zip(&verts[d])
                    .map(|(c, w)| c + rho * (w - c))
                    .collect();
                let fi = eval(&inside)?;
                if fi < worst {
                    verts[d] = inside;
                    fv[d] = fi;
                    true
                } else {
                    false
                }
            };
            if !accepted {
                // shrink toward the best vertex
                for i in 1..=d {
                    let v: Vec<f64> = verts[0]
                        .iter()
                        .zip(&verts[i])
                        .map(|(b, x)| b + sigma * (x - b))
                        .collect();
                    fv[i] = eval(&v)?;
                    verts[i] = v;
                }
            }
        }
    }

    let mut best_i = 0;
    for i in 1..=d {
        if fv[i] < fv[best_i] {
            best_i = i;
        }
    }
    Ok(NelderMeadResult {
        x: verts[best_i].clone(),
        fx: fv[best_i],
        iterations,
        converged,
    })
}
