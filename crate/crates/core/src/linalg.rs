//! Dense vector helpers and a cyclic Jacobi eigensolver for small symmetric matrices.

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `out = a - b`
pub fn sub_into(a: &[f64], b: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(a.iter().zip(b).map(|(x, y)| x - y));
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Gram matrix `A·Aᵀ` of a row-major `rows × cols` matrix.
    pub fn gram(a: &[f64], rows: usize, cols: usize) -> Self {
        assert_eq!(a.len(), rows * cols);
        let mut m = Self::zeros(rows);
        for i in 0..rows {
            let ri = &a[i * cols..(i + 1) * cols];
            for j in i..rows {
                let rj = &a[j * cols..(j + 1) * cols];
                m.set(i, j, dot(ri, rj));
            }
        }
        m
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.get(i, j);
                s += 2.0 * v * v;
            }
        }
        s.sqrt()
    }

    fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    /// Eigenvalues in ascending order, by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        const MAX_SWEEPS: usize = 100;
        let n = self.n;
        let mut a = self.clone();
        let scale = a.frobenius().max(f64::MIN_POSITIVE);
        for _ in 0..MAX_SWEEPS {
            if a.off_diagonal_norm() <= 1e-15 * scale {
                let mut ev: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
                ev.sort_by(|x, y| x.total_cmp(y));
                return Ok(ev);
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(q, q);
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        if k == p || k == q {
                            continue;
                        }
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    a.set(p, p, app - t * apq);
                    a.set(q, q, aqq + t * apq);
                    a.set(p, q, 0.0);
                }
            }
        }
        Err(Error::EigenNoConvergence(MAX_SWEEPS))
    }

    /// Inverse and log-determinant of a positive definite matrix, by Cholesky.
    pub fn spd_inverse(&self) -> Result<(SymMatrix, f64)> {
        let n = self.n;
        // lower factor, row-major
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite(j));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / d;
            }
        }
        let log_det = 2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>();
        // L⁻¹ column by column
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            for i in c..n {
                let mut v = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    v -= l[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = v / l[i * n + i];
            }
        }
        // A⁻¹ = L⁻ᵀ L⁻¹
        let mut inv = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut v = 0.0;
                for k in j..n {
                    v += linv[k * n + i] * linv[k * n + j];
                }
                inv.set(i, j, v);
            }
        }
        Ok((inv, log_det))
    }
}
