//! Spherical t-designs on S² as a smooth optimization problem.
//!
//! A set of `N` unit vectors is a t-design exactly when
//! `A_{N,t}(X) = (1/N²) Σᵢ Σⱼ Σ_{n=1}^{t} (2n+1)·P_n(xᵢᵀxⱼ)` vanishes. The
//! [`SphericalDesign`] objective works in ambient `R^{3N}` coordinates with a
//! normalization retraction.

mod extremal;
mod harmonics;
mod legendre;

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::SymMatrix;
use crate::problems::Objective;

pub use extremal::{extremal_init, log_det_kernel, ExtremalSystem};
pub use harmonics::{basis_matrix, harmonics_at};
pub use legendre::{kernel, legendre_eval, LegendreTable, DOMAIN_SLACK};

/// Points are re-normalized to this accuracy on construction.
pub const UNIT_TOL: f64 = 1e-12;

/// `N` unit vectors together with the design degree `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<[f64; 3]>,
    t: usize,
}

fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(r > 0.0) || !r.is_finite() {
        return None;
    }
    Some([v[0] / r, v[1] / r, v[2] / r])
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl PointSet {
    /// Normalizes every point; zero or non-finite points are rejected.
    pub fn new(points: Vec<[f64; 3]>, t: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDimension {
                what: "point set".into(),
                n: 0,
                reason: "needs at least one point",
            });
        }
        let points = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| normalize(p).ok_or(Error::DegenerateRetraction(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, t })
    }

    /// Builds a set from `3N` ambient coordinates.
    pub fn from_flat(x: &[f64], t: usize) -> Result<Self> {
        if !x.len().is_multiple_of(3) {
            return Err(Error::InvalidDimension {
                what: "flat point coordinates".into(),
                n: x.len(),
                reason: "length must be a multiple of 3",
            });
        }
        Self::new(x.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(), t)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.t
    }

    pub fn with_degree(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    /// Writes one point per line with 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(w, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
        }
        Ok(())
    }

    /// Reads the format produced by [`PointSet::write_text`]. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn read_text<R: BufRead>(r: R, t: usize) -> Result<Self> {
        let mut pts = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| invalid("points", e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| invalid("points", format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 3 {
                return Err(invalid(
                    "points",
                    format!("line {}: expected 3 coordinates, got {}", lineno + 1, vals.len()),
                ));
            }
            pts.push([vals[0], vals[1], vals[2]]);
        }
        Self::new(pts, t)
    }
}

/// `A_{N,t}` by the Legendre double sum, using symmetry over `i < j`.
pub fn ant_value(x: &PointSet) -> f64 {
    value_of_unit_points(&x.points, x.t)
}

fn value_of_unit_points(pts: &[[f64; 3]], t: usize) -> f64 {
    let n = pts.len();
    let mut sum = Neumaier::default();
    sum.add((t * (t + 2)) as f64 * n as f64);
    for i in 0..n {
        for j in (i + 1)..n {
            sum.add(2.0 * kernel(dot3(&pts[i], &pts[j]).clamp(-1.0, 1.0), t).0);
        }
    }
    sum.total() / (n * n) as f64
}

/// Compensated summation; the double sum cancels to a value far below its terms.
#[derive(Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Euclidean gradient `(2/N²) Σⱼ G'(xᵢᵀxⱼ) xⱼ` of the double sum, projected
/// onto the tangent space at each point.
pub fn ant_gradient(x: &PointSet) -> Vec<[f64; 3]> {
    let mut g = euclidean_gradient(&x.points, x.t);
    for (gi, xi) in g.iter_mut().zip(&x.points) {
        project(gi, xi);
    }
    g
}

fn euclidean_gradient(pts: &[[f64; 3]], t: usize) -> Vec<[f64; 3]> {
    let n = pts.len();
    let scale = 2.0 / (n * n) as f64;
    let d1 = kernel(1.0, t).1;
    let mut g: Vec<[f64; 3]> = pts.iter().map(|p| [d1 * p[0], d1 * p[1], d1 * p[2]]).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let dg = kernel(dot3(&pts[i], &pts[j]).clamp(-1.0, 1.0), t).1;
            for k in 0..3 {
                g[i][k] += dg * pts[j][k];
                g[j][k] += dg * pts[i][k];
            }
        }
    }
    for gi in &mut g {
        for v in gi.iter_mut() {
            *v *= scale;
        }
    }
    g
}

fn project(g: &mut [f64; 3], x: &[f64; 3]) {
    let c = dot3(g, x);
    for k in 0..3 {
        g[k] -= c * x[k];
    }
}

/// `A_{N,t}` through the harmonics: `(4π/N²) Σ_{n≥1,k} (Σᵢ Y_n^k(xᵢ))²`.
pub fn ant_value_harmonic(x: &PointSet) -> f64 {
    let t = x.t;
    let rows = (t + 1) * (t + 1);
    let mut sums = vec![0.0; rows];
    let mut col = vec![0.0; rows];
    for &p in &x.points {
        harmonics_at(p, t, &mut col);
        for (s, v) in sums.iter_mut().zip(&col) {
            *s += v;
        }
    }
    let n = x.len() as f64;
    4.0 * PI / (n * n) * sums[1..].iter().map(|s| s * s).sum::<f64>()
}

/// Maps each point to `(xᵢ + sᵢ)/‖xᵢ + sᵢ‖`.
pub fn retract(x: &PointSet, s: &[[f64; 3]]) -> Result<PointSet> {
    if s.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: s.len() });
    }
    let points = x
        .points
        .iter()
        .zip(s)
        .enumerate()
        .map(|(i, (p, d))| {
            if !d.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("retraction step"));
            }
            normalize([p[0] + d[0], p[1] + d[1], p[2] + d[2]]).ok_or(Error::DegenerateRetraction(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointSet { points, t: x.t })
}

/// Equal-area generalized spiral points. `seed = 0` gives the plain spiral;
/// any other seed adds a small deterministic perturbation.
pub fn spiral_init(n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidDimension {
            what: "spiral".into(),
            n,
            reason: "needs at least one point",
        });
    }
    if n == 1 {
        return PointSet::new(vec![[0.0, 0.0, 1.0]], 0);
    }
    let nf = n as f64;
    let mut pts = Vec::with_capacity(n);
    let mut phi: f64 = 0.0;
    for k in 1..=n {
        let z = 1.0 - (2.0 * k as f64 - 1.0) / nf;
        let r = (1.0 - z * z).sqrt();
        if k > 1 {
            phi += 3.6 / (nf * (1.0 - z * z)).sqrt();
        }
        pts.push([r * phi.cos(), r * phi.sin(), z]);
    }
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = 0.1 / nf.sqrt();
        for p in &mut pts {
            for v in p.iter_mut() {
                *v += amp * rng.gen_range(-1.0..1.0);
            }
        }
    }
    PointSet::new(pts, 0)
}

/// Stationarity and unisolvence summary of a candidate design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCertificate {
    pub t: usize,
    pub n_points: usize,
    pub objective_value: f64,
    pub gradient_norm: f64,
    pub min_singular_value: f64,
    pub grad_tol: f64,
    pub sigma_floor: f64,
    pub is_design: bool,
}

/// Default margin on the smallest singular value.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Smallest singular value of the `(t+1)² × N` basis matrix, from the
/// eigenvalues of its Gram matrix. Zero when `N < (t+1)²`.
pub fn min_singular_value(x: &PointSet) -> Result<f64> {
    let rows = (x.t + 1) * (x.t + 1);
    if x.len() < rows {
        return Ok(0.0);
    }
    let y = basis_matrix(&x.points, x.t);
    let gram = SymMatrix::gram(&y, rows, x.len());
    let eig = gram.eigenvalues()?;
    Ok(eig[0].max(0.0).sqrt())
}

pub fn certify(x: &PointSet, grad_tol: f64, sigma_floor: f64) -> Result<DesignCertificate> {
    let objective_value = ant_value(x);
    let gradient_norm = ant_gradient(x)
        .iter()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let min_singular_value = min_singular_value(x)?;
    Ok(DesignCertificate {
        t: x.t,
        n_points: x.len(),
        objective_value,
        gradient_norm,
        min_singular_value,
        grad_tol,
        sigma_floor,
        is_design: gradient_norm <= grad_tol && min_singular_value > sigma_floor,
    })
}

/// `A_{N,t}` as an [`Objective`] over `R^{3N}`.
///
/// `value` normalizes each 3-block first, so the gradient returned here is the
/// exact gradient of `value` everywhere and the tangential gradient on the
/// sphere product.
#[derive(Debug, Clone)]
pub struct SphericalDesign {
    n_points: usize,
    t: usize,
    start: Option<Vec<f64>>,
}

impl SphericalDesign {
    pub fn new(n_points: usize, t: usize) -> Result<Self> {
        if n_points == 0 {
            return Err(Error::InvalidDimension {
                what: "spherical design".into(),
                n: 0,
                reason: "needs at least one point",
            });
        }
        Ok(Self { n_points, t, start: None })
    }

    /// Uses `x0` instead of the plain spiral as the default start.
    pub fn with_start(mut self, x0: &PointSet) -> Result<Self> {
        if x0.len() != self.n_points {
            return Err(Error::DimensionMismatch { expected: self.n_points, got: x0.len() });
        }
        self.start = Some(x0.to_flat());
        Ok(self)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn degree(&self) -> usize {
        self.t
    }

    fn unit_blocks(x: &[f64]) -> (Vec<[f64; 3]>, Vec<f64>) {
        x.chunks_exact(3)
            .map(|c| {
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                ([c[0] / r, c[1] / r, c[2] / r], r)
            })
            .unzip()
    }
}

impl Objective for SphericalDesign {
    fn name(&self) -> String {
        format!("tdesign_t{}_n{}", self.t, self.n_points)
    }

    fn dimension(&self) -> usize {
        3 * self.n_points
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (pts, _) = Self::unit_blocks(x);
        value_of_unit_points(&pts, self.t)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let (pts, radii) = Self::unit_blocks(x);
        let g = euclidean_gradient(&pts, self.t);
        for (((out, mut gi), p), r) in grad.chunks_exact_mut(3).zip(g).zip(&pts).zip(&radii) {
            project(&mut gi, p);
            for k in 0..3 {
                out[k] = gi[k] / r;
            }
        }
    }

    fn default_start(&self) -> Vec<f64> {
        match &self.start {
            Some(x0) => x0.clone(),
            None => spiral_init(self.n_points, 0).map(|p| p.to_flat()).unwrap_or_default(),
        }
    }

    fn retract(&self, x: &[f64], step: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, ((o, a), s)) in out
            .chunks_exact_mut(3)
            .zip(x.chunks_exact(3))
            .zip(step.chunks_exact(3))
            .enumerate()
        {
            let p = normalize([a[0] + s[0], a[1] + s[1], a[2] + s[2]])
                .ok_or(Error::DegenerateRetraction(i))?;
            o.copy_from_slice(&p);
        }
        Ok(())
    }
}
