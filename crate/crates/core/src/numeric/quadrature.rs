//! Gauss–Legendre and Gauss–Hermite nodes by Newton iteration on the
//! orthogonal-polynomial recurrences. Nodes are computed per half and
//! mirrored, so symmetric integrands cancel exactly in paired sums.

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j as f64 + 1.0) * z * p1 - j as f64 * p2) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Hermite nodes and weights for the weight exp(-x^2).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let pi_m4 = std::f64::consts::PI.powf(-0.25);
    let mut z = 0.0_f64;
    for i in 0..m {
        // initial guesses (largest root first)
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[n - 1],
            3 => 1.91 * z - 0.91 * x[n - 2],
            _ => 2.0 * z - x[n - i + 1],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // orthonormal Hermite recurrence
            let mut p1 = pi_m4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                    - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[n - 1 - i] = z;
        x[i] = -z;
        let wi = 2.0 / (pp * pp);
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// E[f(Z)] for Z ~ N(0,1), evaluated with `n`-point Gauss–Hermite.
///
/// Node pairs (+x, -x) are summed adjacently so that even integrands cancel
/// odd contributions exactly.
pub fn normal_expectation<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let (x, w) = gauss_hermite(n);
    let c = 1.0 / std::f64::consts::PI.sqrt();
    let m = n / 2;
    let mut sum = 0.0;
    for i in 0..m {
        let z = std::f64::consts::SQRT_2 * x[n - 1 - i];
        sum += w[i] * (f(z) + f(-z));
    }
    if n % 2 == 1 {
        sum += w[m] * f(0.0);
    }
    c * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // degree <= 15 exact; check x^6 over [-1,1] = 2/7
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(6)).sum();
        assert!((s - 2.0 / 7.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_moments() {
        // E[Z^2] = 1, E[Z^4] = 3 under N(0,1)
        let m2 = normal_expectation(24, |z| z * z);
        let m4 = normal_expectation(24, |z| z.powi(4));
        assert!((m2 - 1.0).abs() < 1e-12, "{m2}");
        assert!((m4 - 3.0).abs() < 1e-11, "{m4}");
    }

    #[test]
    fn odd_moments_vanish_exactly() {
        let m1 = normal_expectation(32, |z| z);
        let m3 = normal_expectation(32, |z| z.powi(3));
        assert_eq!(m1, 0.0);
        assert_eq!(m3, 0.0);
    }

    #[test]
    fn node_doubling_stability() {
        // the censoring-style integrand exp(-exp(1.5 z)) converges slowly in
        // the node count; by 128 vs 256 the doubling difference is ~1e-12
        let a = normal_expectation(128, |z| (-(1.5 * z).exp()).exp());
        let b = normal_expectation(256, |z| (-(1.5 * z).exp()).exp());
        assert!((a - b).abs() < 1e-10, "{}", (a - b).abs());
    }
}
