//! Objective functions: the [`Objective`] abstraction, a set of large-scale
//! unconstrained test problems, and a central finite-difference gradient checker.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A smooth objective `f: Rⁿ → R` with analytic gradient.
///
/// Implementations must be pure: the same `x` always yields the same value and
/// gradient, so one objective may be shared across concurrent runs.
pub trait Objective: Send + Sync {
    fn name(&self) -> String;

    fn dimension(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.gradient(x, grad);
        self.value(x)
    }

    fn default_start(&self) -> Vec<f64>;

    /// Maps `x + step` back onto the feasible set. Euclidean problems add.
    fn retract(&self, x: &[f64], step: &[f64], out: &mut [f64]) -> Result<()> {
        for ((o, a), b) in out.iter_mut().zip(x).zip(step) {
            *o = a + b;
        }
        Ok(())
    }

    /// A known minimizer, when the problem has one in closed form.
    fn known_minimizer(&self) -> Option<Vec<f64>> {
        None
    }
}

/// The test functions implemented here. Formulas follow the usual large-scale
/// unconstrained collection; `i` below is the 1-based coordinate index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Σ 100(x₂ᵢ − x₂ᵢ₋₁²)² + (1 − x₂ᵢ₋₁)²
    ExtendedRosenbrock,
    /// Σ c(x₂ᵢ − x₂ᵢ₋₁³)² + (1 − x₂ᵢ₋₁)²
    WhiteHolst { c: f64 },
    /// x₁² + Σ_{i=2}^{n−1} i·xᵢ² + (xᵢ₋₁ + xᵢ + xᵢ₊₁)²
    PerturbedTridiagonalQuadratic,
    /// Σ (x₂ᵢ₋₁² + x₂ᵢ − 11)² + (x₂ᵢ₋₁ + x₂ᵢ² − 7)²
    ExtendedHimmelblau,
    /// Σ exp(xᵢ) − i·xᵢ
    Diagonal1,
    /// Σ exp(xᵢ) − xᵢ/i
    Diagonal2,
    /// Σ exp(xᵢ) − i·sin(xᵢ)
    Diagonal3,
    /// Σ (i/10)(exp(xᵢ) − xᵢ)
    Raydan1,
    /// Σ exp(xᵢ) − xᵢ
    Raydan2,
    /// Σ exp(xᵢ) − √i·xᵢ
    Hager,
    /// (Σ xᵢ)² + Σ (i/100)·xᵢ²
    QuadraticDiagonalPerturbed,
    /// Σ (x₂ᵢ₋₁ + x₂ᵢ − 3)² + (x₂ᵢ₋₁ − x₂ᵢ + 1)⁴
    ExtendedTridiagonal1,
    /// Σ (a + 10b)² + 5(c − d)² + (b − 2c)⁴ + 10(a − d)⁴ over blocks of four
    ExtendedPowell,
    /// Σ (1.5 − a(1−b))² + (2.25 − a(1−b²))² + (2.625 − a(1−b³))²
    ExtendedBeale,
    /// Σ_{i<n} (xᵢ² + xₙ²)² − 4xᵢ + 3
    Arwhead,
    /// Σ (a−2)² + (a−2)²b² + (b+1)²
    ExtendedDenschnb,
    /// (x₁ − 1)² + Σ_{i≥2} i(2xᵢ − xᵢ₋₁)²
    Tridia,
    /// Σ_{i<n} (xᵢ² + xᵢ₊₁²)² − 4xᵢ + 3
    Engval1,
}

pub const WHITE_HOLST_C: f64 = 1e4;

impl ProblemKind {
    pub const ALL: [ProblemKind; 18] = [
        ProblemKind::ExtendedRosenbrock,
        ProblemKind::WhiteHolst { c: WHITE_HOLST_C },
        ProblemKind::PerturbedTridiagonalQuadratic,
        ProblemKind::ExtendedHimmelblau,
        ProblemKind::Diagonal1,
        ProblemKind::Diagonal2,
        ProblemKind::Diagonal3,
        ProblemKind::Raydan1,
        ProblemKind::Raydan2,
        ProblemKind::Hager,
        ProblemKind::QuadraticDiagonalPerturbed,
        ProblemKind::ExtendedTridiagonal1,
        ProblemKind::ExtendedPowell,
        ProblemKind::ExtendedBeale,
        ProblemKind::Arwhead,
        ProblemKind::ExtendedDenschnb,
        ProblemKind::Tridia,
        ProblemKind::Engval1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::ExtendedRosenbrock => "extended_rosenbrock",
            ProblemKind::WhiteHolst { .. } => "white_holst",
            ProblemKind::PerturbedTridiagonalQuadratic => "perturbed_tridiagonal_quadratic",
            ProblemKind::ExtendedHimmelblau => "extended_himmelblau",
            ProblemKind::Diagonal1 => "diagonal1",
            ProblemKind::Diagonal2 => "diagonal2",
            ProblemKind::Diagonal3 => "diagonal3",
            ProblemKind::Raydan1 => "raydan1",
            ProblemKind::Raydan2 => "raydan2",
            ProblemKind::Hager => "hager",
            ProblemKind::QuadraticDiagonalPerturbed => "quadratic_diagonal_perturbed",
            ProblemKind::ExtendedTridiagonal1 => "extended_tridiagonal1",
            ProblemKind::ExtendedPowell => "extended_powell",
            ProblemKind::ExtendedBeale => "extended_beale",
            ProblemKind::Arwhead => "arwhead",
            ProblemKind::ExtendedDenschnb => "extended_denschnb",
            ProblemKind::Tridia => "tridia",
            ProblemKind::Engval1 => "engval1",
        }
    }

    /// Checks the problem-specific constraint on `n`.
    pub fn validate_dimension(&self, n: usize) -> Result<()> {
        let fail = |reason| {
            Err(Error::InvalidDimension {
                what: self.name().to_string(),
                n,
                reason,
            })
        };
        match self {
            ProblemKind::ExtendedRosenbrock
            | ProblemKind::WhiteHolst { .. }
            | ProblemKind::ExtendedHimmelblau
            | ProblemKind::ExtendedTridiagonal1
            | ProblemKind::ExtendedBeale
            | ProblemKind::ExtendedDenschnb => {
                if n == 0 || !n.is_multiple_of(2) {
                    return fail("must be even and positive");
                }
            }
            ProblemKind::ExtendedPowell => {
                if n == 0 || !n.is_multiple_of(4) {
                    return fail("must be a positive multiple of 4");
                }
            }
            ProblemKind::PerturbedTridiagonalQuadratic => {
                if n < 3 {
                    return fail("must be at least 3");
                }
            }
            ProblemKind::Arwhead | ProblemKind::Tridia | ProblemKind::Engval1 => {
                if n < 2 {
                    return fail("must be at least 2");
                }
            }
            _ => {
                if n == 0 {
                    return fail("must be positive");
                }
            }
        }
        if let ProblemKind::WhiteHolst { c } = self {
            if !(*c > 0.0 && c.is_finite()) {
                return Err(invalid("c", format!("must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let alias = match key.as_str() {
            "rosenbrock" => "extended_rosenbrock",
            "tridiagonal_quadratic" | "perturbed_tridiagonal" | "ptq" => {
                "perturbed_tridiagonal_quadratic"
            }
            "himmelblau" => "extended_himmelblau",
            other => other,
        };
        ProblemKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == alias)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

/// A concrete test problem: a [`ProblemKind`] at a fixed dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    kind: ProblemKind,
    n: usize,
}

impl Problem {
    pub fn new(kind: ProblemKind, n: usize) -> Result<Self> {
        kind.validate_dimension(n)?;
        Ok(Self { kind, n })
    }

    pub fn by_name(name: &str, n: usize) -> Result<Self> {
        Self::new(name.parse()?, n)
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }
}

/// Extended White & Holst function with coefficient `c`.
pub fn white_holst(n: usize, c: f64) -> Result<Problem> {
    Problem::new(ProblemKind::WhiteHolst { c }, n)
}

pub fn perturbed_tridiagonal_quadratic(n: usize) -> Result<Problem> {
    Problem::new(ProblemKind::PerturbedTridiagonalQuadratic, n)
}

/// Every problem of [`ProblemKind::ALL`] at every size in `sizes` for which
/// the dimension is valid, in a fixed order (problem-major).
pub fn standard_suite(sizes: &[usize]) -> Result<Vec<Problem>> {
    if let Some(&bad) = sizes.iter().find(|&&n| n < 4) {
        return Err(Error::InvalidDimension {
            what: "standard_suite".into(),
            n: bad,
            reason: "suite sizes must be at least 4",
        });
    }
    let mut out = Vec::new();
    for kind in ProblemKind::ALL {
        for &n in sizes {
            if let Ok(p) = Problem::new(kind, n) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

#[inline]
fn pairs(x: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    x.chunks_exact(2).map(|c| (c[0], c[1]))
}

impl Objective for Problem {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let idx = |k: usize| (k + 1) as f64;
        match self.kind {
            ProblemKind::ExtendedRosenbrock => pairs(x)
                .map(|(a, b)| 100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2))
                .sum(),
            ProblemKind::WhiteHolst { c } => pairs(x)
                .map(|(a, b)| c * (b - a * a * a).powi(2) + (1.0 - a).powi(2))
                .sum(),
            ProblemKind::PerturbedTridiagonalQuadratic => {
                let mut f = x[0] * x[0];
                for k in 1..self.n - 1 {
                    let u = x[k - 1] + x[k] + x[k + 1];
                    f += idx(k) * x[k] * x[k] + u * u;
                }
                f
            }
            ProblemKind::ExtendedHimmelblau => pairs(x)
                .map(|(a, b)| (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2))
                .sum(),
            ProblemKind::Diagonal1 => x
                .iter()
                .enumerate()
                .map(|(k, &v)| v.exp() - idx(k) * v)
                .sum(),
            ProblemKind::Diagonal2 => x
                .iter()
                .enumerate()
                .map(|(k, &v)| v.exp() - v / idx(k))
                .sum(),
            ProblemKind::Diagonal3 => x
                .iter()
                .enumerate()
                .map(|(k, &v)| v.exp() - idx(k) * v.sin())
                .sum(),
            ProblemKind::Raydan1 => x
                .iter()
                .enumerate()
                .map(|(k, &v)| idx(k) / 10.0 * (v.exp() - v))
                .sum(),
            ProblemKind::Raydan2 => x.iter().map(|&v| v.exp() - v).sum(),
            ProblemKind::Hager => x
                .iter()
                .enumerate()
                .map(|(k, &v)| v.exp() - idx(k).sqrt() * v)
                .sum(),
            ProblemKind::QuadraticDiagonalPerturbed => {
                let s: f64 = x.iter().sum();
                s * s
                    + x.iter()
                        .enumerate()
                        .map(|(k, &v)| idx(k) / 100.0 * v * v)
                        .sum::<f64>()
            }
            ProblemKind::ExtendedTridiagonal1 => pairs(x)
                .map(|(a, b)| (a + b - 3.0).powi(2) + (a - b + 1.0).powi(4))
                .sum(),
            ProblemKind::ExtendedPowell => x
                .chunks_exact(4)
                .map(|q| {
                    let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
                    (a + 10.0 * b).powi(2)
                        + 5.0 * (c - d).powi(2)
                        + (b - 2.0 * c).powi(4)
                        + 10.0 * (a - d).powi(4)
                })
                .sum(),
            ProblemKind::ExtendedBeale => pairs(x)
                .map(|(a, b)| {
                    let r1 = 1.5 - a * (1.0 - b);
                    let r2 = 2.25 - a * (1.0 - b * b);
                    let r3 = 2.625 - a * (1.0 - b * b * b);
                    r1 * r1 + r2 * r2 + r3 * r3
                })
                .sum(),
            ProblemKind::Arwhead => {
                let last = x[self.n - 1];
                x[..self.n - 1]
                    .iter()
                    .map(|&v| (v * v + last * last).powi(2) - 4.0 * v + 3.0)
                    .sum()
            }
            ProblemKind::ExtendedDenschnb => pairs(x)
                .map(|(a, b)| {
                    let d = a - 2.0;
                    d * d + d * d * b * b + (b + 1.0).powi(2)
                })
                .sum(),
            ProblemKind::Tridia => {
                let mut f = (x[0] - 1.0).powi(2);
                for k in 1..self.n {
                    f += idx(k) * (2.0 * x[k] - x[k - 1]).powi(2);
                }
                f
            }
            ProblemKind::Engval1 => x
                .windows(2)
                .map(|w| (w[0] * w[0] + w[1] * w[1]).powi(2) - 4.0 * w[0] + 3.0)
                .sum(),
        }
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(g.len(), self.n);
        let idx = |k: usize| (k + 1) as f64;
        let n = self.n;
        match self.kind {
            ProblemKind::ExtendedRosenbrock => {
                for (gc, xc) in g.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
                    let (a, b) = (xc[0], xc[1]);
                    let r = b - a * a;
                    gc[0] = -400.0 * a * r - 2.0 * (1.0 - a);
                    gc[1] = 200.0 * r;
                }
            }
            ProblemKind::WhiteHolst { c } => {
                for (gc, xc) in g.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
                    let (a, b) = (xc[0], xc[1]);
                    let r = b - a * a * a;
                    gc[0] = -6.0 * c * a * a * r - 2.0 * (1.0 - a);
                    gc[1] = 2.0 * c * r;
                }
            }
            ProblemKind::PerturbedTridiagonalQuadratic => {
                g.fill(0.0);
                g[0] = 2.0 * x[0];
                for k in 1..n - 1 {
                    let u = 2.0 * (x[k - 1] + x[k] + x[k + 1]);
                    g[k] += 2.0 * idx(k) * x[k] + u;
                    g[k - 1] += u;
                    g[k + 1] += u;
                }
            }
            ProblemKind::ExtendedHimmelblau => {
                for (gc, xc) in g.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
                    let (a, b) = (xc[0], xc[1]);
                    let p = a * a + b - 11.0;
                    let q = a + b * b - 7.0;
                    gc[0] = 4.0 * a * p + 2.0 * q;
                    gc[1] = 2.0 * p + 4.0 * b * q;
                }
            }
            ProblemKind::Diagonal1 => {
                for (k, (gi, &v)) in g.iter_mut().zip(x).enumerate() {
                    *gi = v.exp() - idx(k);
                }
            }
            ProblemKind::Diagonal2 => {
                for (k, (gi, &v)) in g.iter_mut().zip(x).enumerate() {
                    *gi = v.exp() - 1.0 / idx(k);
                }
            }
            ProblemKind::Diagonal3 => {
                for (k, (gi, &v)) in g.iter_mut().zip(x).enumerate() {
                    *gi = v.exp() - idx(k) * v.cos();
                }
            }
            ProblemKind::Raydan1 => {
                for (k, (gi, &v)) in g.iter_mut().zip(x).enumerate() {
                    *gi = idx(k) / 10.0 * (v.exp() - 1.0);
                }
            }
            ProblemKind::Raydan2 => {
                for (gi, &v) in g.iter_mut().zip(x) {
                    *gi = v.exp() - 1.0;
                }
            }
            ProblemKind::Hager => {
                for (k, (gi, &v)) in g.iter_mut().zip(x).enumerate() {
                    *gi = v.exp() - idx(k).sqrt();
                }
            }
            ProblemKind::QuadraticDiagonalPerturbed => {
                let s2 = 2.0 * x.iter().sum::<f64>();
                for (k, (gi, &v)) in g.iter_mut().zip(x).enumerate() {
                    *gi = s2 + idx(k) / 50.0 * v;
                }
            }
            ProblemKind::ExtendedTridiagonal1 => {
                for (gc, xc) in g.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
                    let (a, b) = (xc[0], xc[1]);
                    let p = 2.0 * (a + b - 3.0);
                    let q = 4.0 * (a - b + 1.0).powi(3);
                    gc[0] = p + q;
                    gc[1] = p - q;
                }
            }
            ProblemKind::ExtendedPowell => {
                for (gc, q) in g.chunks_exact_mut(4).zip(x.chunks_exact(4)) {
                    let (a, b, c, d) = (q[0], q[1], q[2], q[3]);
                    let t1 = a + 10.0 * b;
                    let t2 = c - d;
                    let t3 = (b - 2.0 * c).powi(3);
                    let t4 = (a - d).powi(3);
                    gc[0] = 2.0 * t1 + 40.0 * t4;
                    gc[1] = 20.0 * t1 + 4.0 * t3;
                    gc[2] = 10.0 * t2 - 8.0 * t3;
                    gc[3] = -10.0 * t2 - 40.0 * t4;
                }
            }
            ProblemKind::ExtendedBeale => {
                for (gc, xc) in g.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
                    let (a, b) = (xc[0], xc[1]);
                    let (b2, b3) = (b * b, b * b * b);
                    let r1 = 1.5 - a * (1.0 - b);
                    let r2 = 2.25 - a * (1.0 - b2);
                    let r3 = 2.625 - a * (1.0 - b3);
                    gc[0] = 2.0 * (r1 * (b - 1.0) + r2 * (b2 - 1.0) + r3 * (b3 - 1.0));
                    gc[1] = 2.0 * a * (r1 + 2.0 * r2 * b + 3.0 * r3 * b2);
                }
            }
            ProblemKind::Arwhead => {
                let last = x[n - 1];
                let mut gl = 0.0;
                for (gi, &v) in g[..n - 1].iter_mut().zip(&x[..n - 1]) {
                    let q = v * v + last * last;
                    *gi = 4.0 * q * v - 4.0;
                    gl += 4.0 * q * last;
                }
                g[n - 1] = gl;
            }
            ProblemKind::ExtendedDenschnb => {
                for (gc, xc) in g.chunks_exact_mut(2).zip(x.chunks_exact(2)) {
                    let (a, b) = (xc[0], xc[1]);
                    let d = a - 2.0;
                    gc[0] = 2.0 * d * (1.0 + b * b);
                    gc[1] = 2.0 * d * d * b + 2.0 * (b + 1.0);
                }
            }
            ProblemKind::Tridia => {
                g.fill(0.0);
                g[0] = 2.0 * (x[0] - 1.0);
                for k in 1..n {
                    let r = 2.0 * idx(k) * (2.0 * x[k] - x[k - 1]);
                    g[k] += 2.0 * r;
                    g[k - 1] -= r;
                }
            }
            ProblemKind::Engval1 => {
                g.fill(0.0);
                for k in 0..n - 1 {
                    let q = 4.0 * (x[k] * x[k] + x[k + 1] * x[k + 1]);
                    g[k] += q * x[k] - 4.0;
                    g[k + 1] += q * x[k + 1];
                }
            }
        }
    }

    fn default_start(&self) -> Vec<f64> {
        let n = self.n;
        let alternating = |a: f64, b: f64| (0..n).map(|k| if k % 2 == 0 { a } else { b }).collect();
        match self.kind {
            ProblemKind::ExtendedRosenbrock | ProblemKind::WhiteHolst { .. } => {
                alternating(-1.2, 1.0)
            }
            ProblemKind::PerturbedTridiagonalQuadratic
            | ProblemKind::QuadraticDiagonalPerturbed => vec![0.5; n],
            ProblemKind::Diagonal1 => vec![1.0 / n as f64; n],
            ProblemKind::Diagonal2 => (0..n).map(|k| 1.0 / (k + 1) as f64).collect(),
            ProblemKind::ExtendedHimmelblau
            | ProblemKind::Diagonal3
            | ProblemKind::Raydan1
            | ProblemKind::Raydan2
            | ProblemKind::Hager
            | ProblemKind::Arwhead
            | ProblemKind::ExtendedDenschnb
            | ProblemKind::Tridia => vec![1.0; n],
            ProblemKind::ExtendedTridiagonal1 | ProblemKind::Engval1 => vec![2.0; n],
            ProblemKind::ExtendedPowell => (0..n).map(|k| [3.0, -1.0, 0.0, 1.0][k % 4]).collect(),
            ProblemKind::ExtendedBeale => alternating(1.0, 0.8),
        }
    }

    fn known_minimizer(&self) -> Option<Vec<f64>> {
        let n = self.n;
        let alternating = |a: f64, b: f64| (0..n).map(|k| if k % 2 == 0 { a } else { b }).collect();
        let per_index = |f: fn(f64) -> f64| Some((0..n).map(|k| f((k + 1) as f64)).collect());
        match self.kind {
            ProblemKind::ExtendedRosenbrock | ProblemKind::WhiteHolst { .. } => Some(vec![1.0; n]),
            ProblemKind::PerturbedTridiagonalQuadratic
            | ProblemKind::QuadraticDiagonalPerturbed
            | ProblemKind::Raydan1
            | ProblemKind::Raydan2
            | ProblemKind::ExtendedPowell => Some(vec![0.0; n]),
            ProblemKind::ExtendedHimmelblau => Some(alternating(3.0, 2.0)),
            ProblemKind::Diagonal1 => per_index(f64::ln),
            ProblemKind::Diagonal2 => per_index(|i| -i.ln()),
            ProblemKind::Hager => per_index(|i| 0.5 * i.ln()),
            ProblemKind::ExtendedTridiagonal1 => Some(alternating(1.0, 2.0)),
            ProblemKind::ExtendedBeale => Some(alternating(3.0, 0.5)),
            ProblemKind::Arwhead => {
                let mut v = vec![1.0; n];
                v[n - 1] = 0.0;
                Some(v)
            }
            ProblemKind::ExtendedDenschnb => Some(alternating(2.0, -1.0)),
            ProblemKind::Tridia => {
                let mut v = vec![1.0; n];
                for k in 1..n {
                    v[k] = v[k - 1] / 2.0;
                }
                Some(v)
            }
            ProblemKind::Diagonal3 | ProblemKind::Engval1 => None,
        }
    }
}

/// Maximum relative component error between the analytic gradient and central
/// differences, `maxᵢ |gᵢ − dᵢ| / (1 + |gᵢ|)`.
///
/// Component `i` uses the step `h·(1 + |xᵢ|)`.
pub fn check_gradient(f: &dyn Objective, x: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if x.len() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: x.len(),
        });
    }
    if !crate::linalg::all_finite(x) {
        return Err(Error::NonFinite("gradient check point"));
    }
    let mut g = vec![0.0; x.len()];
    f.gradient(x, &mut g);
    if !crate::linalg::all_finite(&g) {
        return Err(Error::NonFinite("analytic gradient"));
    }
    let mut xp = x.to_vec();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = f.value(&xp);
        xp[i] = x[i] - step;
        let fm = f.value(&xp);
        xp[i] = x[i];
        if !(fp.is_finite() && fm.is_finite()) {
            return Err(Error::NonFinite("objective during finite differences"));
        }
        let fd = (fp - fm) / (2.0 * step);
        worst = worst.max((g[i] - fd).abs() / (1.0 + g[i].abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct HalfSquare(usize);

    impl Objective for HalfSquare {
        fn name(&self) -> String {
            "half_square".into()
        }
        fn dimension(&self) -> usize {
            self.0
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * crate::linalg::dot(x, x)
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            g.copy_from_slice(x);
        }
        fn default_start(&self) -> Vec<f64> {
            vec![1.0; self.0]
        }
    }

    /// Wraps an objective and doubles its gradient.
    struct Doubled(Problem);

    impl Objective for Doubled {
        fn name(&self) -> String {
            "doubled".into()
        }
        fn dimension(&self) -> usize {
            self.0.dimension()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x)
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) {
            self.0.gradient(x, g);
            g.iter_mut().for_each(|v| *v *= 2.0);
        }
        fn default_start(&self) -> Vec<f64> {
            self.0.default_start()
        }
    }

    #[test]
    fn white_holst_at_minimizer() {
        let p = white_holst(6, 1e4).unwrap();
        let x = vec![1.0; 6];
        assert_eq!(p.value(&x), 0.0);
        let mut g = vec![9.0; 6];
        p.gradient(&x, &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_holst_small_cases() {
        let p = white_holst(2, 1.0).unwrap();
        assert_eq!(p.value(&[0.0, 0.0]), 1.0);

        // c(1 − (−1.2)³)² + (1 + 1.2)² = 1e4·2.728² + 2.2²
        let p = white_holst(2, 1e4).unwrap();
        let expected = 1e4 * 2.728_f64 * 2.728 + 2.2 * 2.2;
        assert!((p.value(&[-1.2, 1.0]) - expected).abs() < 1e-9 * expected);
        assert!((expected - 74_424.68).abs() < 1e-6);
    }

    #[test]
    fn white_holst_rejects_odd_n() {
        assert!(matches!(
            white_holst(5, 1e4),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(white_holst(4, -1.0).is_err());
    }

    #[test]
    fn tridiagonal_quadratic_values() {
        let p = perturbed_tridiagonal_quadratic(3).unwrap();
        assert_eq!(p.value(&[1.0, 0.0, 0.0]), 2.0);
        let p = perturbed_tridiagonal_quadratic(4).unwrap();
        assert_eq!(p.value(&[1.0; 4]), 24.0);
        let p = perturbed_tridiagonal_quadratic(10).unwrap();
        assert_eq!(p.value(&[0.0; 10]), 0.0);
        assert!(perturbed_tridiagonal_quadratic(2).is_err());
    }

    #[test]
    fn start_points() {
        let p = white_holst(4, 1e4).unwrap();
        assert_eq!(p.default_start(), vec![-1.2, 1.0, -1.2, 1.0]);
        let p = perturbed_tridiagonal_quadratic(5).unwrap();
        assert_eq!(p.default_start(), vec![0.5; 5]);
    }

    #[test]
    fn rosenbrock_minimizer() {
        let p = Problem::by_name("extended_rosenbrock", 10).unwrap();
        assert_eq!(p.value(&[1.0; 10]), 0.0);
    }

    #[test]
    fn names_round_trip() {
        for kind in ProblemKind::ALL {
            let parsed: ProblemKind = kind.name().parse().unwrap();
            assert_eq!(parsed.name(), kind.name());
        }
        assert!(matches!(
            "no_such_fn".parse::<ProblemKind>(),
            Err(Error::UnknownProblem(_))
        ));
    }

    #[test]
    fn suite_is_deterministic_and_large_enough() {
        let a = standard_suite(&[8, 12]).unwrap();
        let b = standard_suite(&[8, 12]).unwrap();
        assert_eq!(a, b);
        assert!(ProblemKind::ALL.len() >= 12);
        // n=12 is valid for every kind; n=8 too
        assert_eq!(a.len(), 2 * ProblemKind::ALL.len());
        assert!(standard_suite(&[2]).is_err());
    }

    #[test]
    fn suite_skips_invalid_sizes() {
        let s = standard_suite(&[6]).unwrap();
        assert!(s.iter().all(|p| p.kind() != ProblemKind::ExtendedPowell));
    }

    #[test]
    fn check_gradient_on_quadratic() {
        let f = HalfSquare(5);
        let x = [0.3, -1.2, 2.0, 0.0, 0.7];
        assert!(check_gradient(&f, &x, 1e-6).unwrap() <= 1e-8);
    }

    #[test]
    fn check_gradient_white_holst_start() {
        let p = white_holst(2, 1e4).unwrap();
        assert!(check_gradient(&p, &[-1.2, 1.0], 1e-6).unwrap() <= 1e-6);
    }

    #[test]
    fn check_gradient_detects_doubled_gradient() {
        // |2g − g|/(1 + 2|g|) → 0.5 for large |g|
        let p = Doubled(white_holst(2, 1e4).unwrap());
        let err = check_gradient(&p, &[-1.2, 1.0], 1e-6).unwrap();
        assert!((err - 0.5).abs() < 1e-4, "err = {err}");
    }

    #[test]
    fn check_gradient_rejects_bad_inputs() {
        let f = HalfSquare(2);
        assert!(check_gradient(&f, &[0.0, 0.0], 0.0).is_err());
        assert!(matches!(
            check_gradient(&f, &[f64::NAN, 0.0], 1e-6),
            Err(Error::NonFinite(_))
        ));
        let p = Problem::by_name("raydan2", 2).unwrap();
        assert!(matches!(
            check_gradient(&p, &[709.9, 0.0], 1e-3),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn known_minimizers_are_stationary() {
        for kind in ProblemKind::ALL {
            let p = Problem::new(kind, 12).unwrap();
            if let Some(xs) = p.known_minimizer() {
                let mut g = vec![0.0; 12];
                let f = p.value_and_gradient(&xs, &mut g);
                let gn = crate::linalg::norm(&g);
                assert!(gn <= 1e-8 * (1.0 + f.abs()), "{kind}: ‖g‖ = {gn}");
            }
        }
    }

    #[test]
    fn evaluation_is_pure() {
        for p in standard_suite(&[8]).unwrap() {
            let x = p.default_start();
            assert_eq!(p.value(&x).to_bits(), p.value(&x).to_bits());
        }
    }
}
