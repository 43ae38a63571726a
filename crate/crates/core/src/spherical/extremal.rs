//! Extremal (maximum-determinant) point systems, used as well-conditioned
//! starting sets for the design problem.
//!
//! For `N ≤ (t+1)²` points the kernel matrix `K_ij = Σ_{n=0}^{t} (2n+1)P_n(xᵢᵀxⱼ)`
//! equals `4π·YᵀY` with `Y` the harmonic basis matrix, so maximizing
//! `log det K` spreads the singular values of `Y` away from zero.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::problems::Objective;
use crate::solver::{minimize, SolverConfig, StoppingRule, Variant};

use super::{kernel, project, spiral_init, PointSet, SphericalDesign};

fn kernel_matrix(pts: &[[f64; 3]], t: usize) -> (SymMatrix, SymMatrix) {
    let n = pts.len();
    let mut k = SymMatrix::zeros(n);
    let mut dk = SymMatrix::zeros(n);
    let diag = (t + 1) as f64 * (t + 1) as f64;
    for i in 0..n {
        k.set(i, i, diag);
        for j in (i + 1)..n {
            let z = super::dot3(&pts[i], &pts[j]).clamp(-1.0, 1.0);
            let (g, dg) = kernel(z, t);
            k.set(i, j, 1.0 + g);
            dk.set(i, j, dg);
        }
    }
    (k, dk)
}

/// `log det K` for the points of `x` at degree `x.degree()`.
pub fn log_det_kernel(x: &PointSet) -> Result<f64> {
    Ok(kernel_matrix(x.points(), x.degree()).0.spd_inverse()?.1)
}

/// `−log det K` over `R^{3N}`; `+∞` where `K` is singular.
#[derive(Debug, Clone)]
pub struct ExtremalSystem {
    inner: SphericalDesign,
}

impl ExtremalSystem {
    pub fn new(n_points: usize, t: usize) -> Result<Self> {
        let dim = (t + 1) * (t + 1);
        if n_points > dim {
            return Err(Error::InvalidDimension {
                what: format!("extremal system of degree {t}"),
                n: n_points,
                reason: "needs at most (t+1)² points",
            });
        }
        Ok(Self { inner: SphericalDesign::new(n_points, t)? })
    }

    pub fn with_start(self, x0: &PointSet) -> Result<Self> {
        Ok(Self { inner: self.inner.with_start(x0)? })
    }
}

impl Objective for ExtremalSystem {
    fn name(&self) -> String {
        format!("extremal_t{}_n{}", self.inner.degree(), self.inner.n_points())
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (pts, _) = SphericalDesign::unit_blocks(x);
        match kernel_matrix(&pts, self.inner.degree()).0.spd_inverse() {
            Ok((_, log_det)) => -log_det,
            Err(_) => f64::INFINITY,
        }
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let (pts, radii) = SphericalDesign::unit_blocks(x);
        let (k, dk) = kernel_matrix(&pts, self.inner.degree());
        let Ok((inv, _)) = k.spd_inverse() else {
            grad.fill(f64::NAN);
            return;
        };
        let n = pts.len();
        for (i, (out, p)) in grad.chunks_exact_mut(3).zip(&pts).enumerate() {
            let mut g = [0.0; 3];
            for (j, q) in pts.iter().enumerate() {
                if j == i {
                    continue;
                }
                let w = -2.0 * inv.get(i, j) * dk.get(i.min(j), i.max(j));
                for c in 0..3 {
                    g[c] += w * q[c];
                }
            }
            project(&mut g, p);
            for c in 0..3 {
                out[c] = g[c] / radii[i];
            }
        }
        debug_assert_eq!(grad.len(), 3 * n);
    }

    fn default_start(&self) -> Vec<f64> {
        self.inner.default_start()
    }

    fn retract(&self, x: &[f64], step: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.retract(x, step, out)
    }
}

/// Spiral points refined towards an extremal system of degree `t`.
///
/// The ascent stops once `‖∇ log det K‖ ≤ 1e-6·(initial norm)` or after
/// `max_iter` cycles; the returned set carries degree `t`. Fails with
/// [`Error::NotPositiveDefinite`] when the spiral's kernel matrix is singular,
/// as it is for the unperturbed spiral (`seed = 0`) at `N = (t+1)²`.
pub fn extremal_init(n: usize, t: usize, seed: u64, max_iter: usize) -> Result<PointSet> {
    let x0 = spiral_init(n, seed)?.with_degree(t);
    log_det_kernel(&x0)?;
    let f = ExtremalSystem::new(n, t)?.with_start(&x0)?;
    let mut cfg = SolverConfig::for_variant(Variant::Rbbtr);
    cfg.stopping = StoppingRule::Relative { eps: 1e-6 };
    cfg.max_iter = max_iter;
    let report = minimize(&f, &f.default_start(), &cfg)?;
    PointSet::from_flat(&report.final_x, t)
}
