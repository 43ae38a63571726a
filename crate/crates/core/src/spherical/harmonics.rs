//! Real orthonormal spherical harmonics on S² up to degree `t`.
//!
//! Row `n² + k` (k = 0..2n) of the basis matrix holds, in order, the `m = 0`
//! harmonic followed by the cosine and sine harmonics for `m = 1..=n`. The
//! degree-0 row is the constant `1/√(4π)`. No Condon-Shortley phase.

use std::f64::consts::PI;

/// Fully normalized associated Legendre values `P̄_n^m(cos θ)` for
/// `0 ≤ m ≤ n ≤ t`, stored at `n(n+1)/2 + m`.
fn normalized_legendre(cos_theta: f64, sin_theta: f64, t: usize) -> Vec<f64> {
    let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut p = vec![0.0; (t + 1) * (t + 2) / 2];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=t {
        if m > 0 {
            let mf = m as f64;
            p[idx(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta * p[idx(m - 1, m - 1)];
        }
        if m < t {
            p[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * cos_theta * p[idx(m, m)];
        }
        for n in (m + 2)..=t {
            let (nf, mf) = (n as f64, m as f64);
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0).powi(2) - mf * mf) / (4.0 * (nf - 1.0).powi(2) - 1.0)).sqrt();
            p[idx(n, m)] = a * (cos_theta * p[idx(n - 1, m)] - b * p[idx(n - 2, m)]);
        }
    }
    p
}

/// All `(t+1)²` harmonics at the unit vector `x`, written into `out`.
pub fn harmonics_at(x: [f64; 3], t: usize, out: &mut [f64]) {
    assert_eq!(out.len(), (t + 1) * (t + 1));
    let rho = x[0].hypot(x[1]);
    let cos_theta = x[2].clamp(-1.0, 1.0);
    let phi = x[1].atan2(x[0]);
    let p = normalized_legendre(cos_theta, rho, t);
    let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
    for n in 0..=t {
        let row = n * n;
        out[row] = p[idx(n, 0)];
        for m in 1..=n {
            let (s, c) = (m as f64 * phi).sin_cos();
            let v = std::f64::consts::SQRT_2 * p[idx(n, m)];
            out[row + 2 * m - 1] = v * c;
            out[row + 2 * m] = v * s;
        }
    }
}

/// Basis matrix of shape `(t+1)² × N`, row-major.
pub fn basis_matrix(points: &[[f64; 3]], t: usize) -> Vec<f64> {
    let rows = (t + 1) * (t + 1);
    let cols = points.len();
    let mut y = vec![0.0; rows * cols];
    let mut col = vec![0.0; rows];
    for (j, &x) in points.iter().enumerate() {
        harmonics_at(x, t, &mut col);
        for (r, &v) in col.iter().enumerate() {
            y[r * cols + j] = v;
        }
    }
    y
}
