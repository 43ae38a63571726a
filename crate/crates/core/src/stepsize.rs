//! Barzilai-Borwein step-sizes and the regularized, adaptively alternated variant.
//!
//! All quantities here are *inverse* step lengths (curvature estimates): the
//! gradient step is `−g/α`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::dot;

/// The pair `s = x_k − x_{k−1}`, `y = g_k − g_{k−1}` with cached inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementPair {
    s: Vec<f64>,
    y: Vec<f64>,
    ss: f64,
    sy: f64,
    yy: f64,
}

impl DisplacementPair {
    pub fn new(s: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if s.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: y.len(),
            });
        }
        let ss = dot(&s, &s);
        if ss == 0.0 {
            return Err(Error::ZeroDisplacement);
        }
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if !(ss.is_finite() && sy.is_finite() && yy.is_finite()) {
            return Err(Error::NonFinite("displacement pair"));
        }
        Ok(Self { s, y, ss, sy, yy })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn ss(&self) -> f64 {
        self.ss
    }

    pub fn sy(&self) -> f64 {
        self.sy
    }

    pub fn yy(&self) -> f64 {
        self.yy
    }

    pub fn has_positive_curvature(&self) -> bool {
        self.sy > 0.0
    }
}

/// `sᵀy / sᵀs`. Non-positive when the pair sees negative curvature.
pub fn bb1(p: &DisplacementPair) -> f64 {
    p.sy / p.ss
}

/// `yᵀy / sᵀy`.
pub fn bb2(p: &DisplacementPair) -> Result<f64> {
    if p.sy == 0.0 {
        return Err(Error::ZeroCurvature);
    }
    Ok(p.yy / p.sy)
}

/// Regularized BB step `(sᵀy + τ·yᵀy) / (sᵀs + τ·sᵀy)`.
///
/// Lies between [`bb1`] (at `τ = 0`) and [`bb2`] (as `τ → ∞`) and is
/// non-decreasing in `τ`. Requires `sᵀy > 0`.
pub fn alpha_new(p: &DisplacementPair, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(invalid("tau", format!("must be non-negative, got {tau}")));
    }
    if p.sy <= 0.0 {
        return Err(Error::NonPositiveCurvature(p.sy));
    }
    let (lo, hi) = (p.sy / p.ss, p.yy / p.sy);
    if tau == 0.0 {
        return Ok(lo);
    }
    if tau.is_infinite() {
        return Ok(hi);
    }
    // bb2 − λ(bb2 − bb1) with λ = sᵀs/(sᵀs + τsᵀy): every operation is
    // monotone under rounding, so the bounds and the ordering in τ hold exactly.
    let lambda = p.ss / (p.ss + tau * p.sy);
    Ok((hi - lambda * (hi - lo).max(0.0)).max(lo))
}

/// Bounds `t_min ≤ 1/α ≤ t_max` on the step length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for StepBounds {
    fn default() -> Self {
        Self {
            t_min: 1e-10,
            t_max: 1e10,
        }
    }
}

impl StepBounds {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        let b = Self { t_min, t_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min <= self.t_max && self.t_max.is_finite()) {
            return Err(invalid(
                "t_min/t_max",
                format!("need 0 < t_min ≤ t_max < ∞, got [{}, {}]", self.t_min, self.t_max),
            ));
        }
        Ok(())
    }

    /// Smallest admissible α (longest step).
    pub fn alpha_min(&self) -> f64 {
        1.0 / self.t_max
    }

    /// Largest admissible α (shortest step).
    pub fn alpha_max(&self) -> f64 {
        1.0 / self.t_min
    }

    /// Clamps α so that `1/α ∈ [t_min, t_max]`. NaN maps to the longest step.
    pub fn clamp(&self, alpha: f64) -> f64 {
        if alpha.is_nan() {
            return self.alpha_min();
        }
        alpha.clamp(self.alpha_min(), self.alpha_max())
    }
}

/// `‖y‖/‖s‖`, used when `sᵀy ≤ 0`. A zero `y` gives the longest admissible step.
pub fn negative_curvature_fallback(p: &DisplacementPair, bounds: &StepBounds) -> f64 {
    if p.yy == 0.0 {
        return bounds.alpha_min();
    }
    (p.yy / p.ss).sqrt()
}

/// The last `ϱ + 1` regularized step-sizes, one per outer iteration.
///
/// Within one outer iteration, repeated [`StepsizeWindow::record`] calls
/// overwrite the newest slot; [`StepsizeWindow::advance`] opens a new slot for
/// the next iteration. Values are stored unclamped.
#[derive(Debug, Clone)]
pub struct StepsizeWindow {
    values: VecDeque<f64>,
    capacity: usize,
    open: bool,
}

impl StepsizeWindow {
    /// Window for `ϱ = rho`, i.e. capacity `ϱ + 1`.
    pub fn new(rho: usize) -> Self {
        Self {
            values: VecDeque::with_capacity(rho + 1),
            capacity: rho + 1,
            open: true,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn record(&mut self, value: f64) {
        debug_assert!(value > 0.0);
        if self.open || self.values.is_empty() {
            if self.values.len() == self.capacity {
                self.values.pop_front();
            }
            self.values.push_back(value);
            self.open = false;
        } else if let Some(last) = self.values.back_mut() {
            *last = value;
        }
    }

    pub fn advance(&mut self) {
        self.open = true;
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }
}

/// Outcome of one step-size selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbbStep {
    /// Clamped α actually used.
    pub alpha: f64,
    pub bb1: f64,
    pub bb2: f64,
    pub alpha_new: f64,
    pub nu: f64,
    /// True when the window maximum was chosen over BB1.
    pub took_window_max: bool,
    /// True when `sᵀy ≤ 0` and the `‖y‖/‖s‖` fallback was used.
    pub negative_curvature: bool,
}

/// Adaptive alternation: records `α_new(τ)` in the window, then returns the
/// window maximum when `bb1/bb2 < ν = 1 − bb1/α_new`, else `bb1`, clamped.
///
/// When `sᵀy ≤ 0`, `α_new` is replaced by `‖y‖/‖s‖`, which is recorded and
/// used directly.
pub fn rbb_select(
    p: &DisplacementPair,
    tau: f64,
    window: &mut StepsizeWindow,
    bounds: &StepBounds,
) -> Result<RbbStep> {
    if !p.has_positive_curvature() {
        let fb = negative_curvature_fallback(p, bounds);
        window.record(fb);
        return Ok(RbbStep {
            alpha: bounds.clamp(fb),
            bb1: bb1(p),
            bb2: f64::NAN,
            alpha_new: fb,
            nu: 0.0,
            took_window_max: false,
            negative_curvature: true,
        });
    }
    let a = bb1(p);
    let b = bb2(p)?;
    let c = alpha_new(p, tau)?;
    window.record(c);
    let nu = if c == a { 0.0 } else { 1.0 - a / c };
    let take_max = a / b < nu;
    let raw = if take_max {
        window.max().expect("window holds the value just recorded")
    } else {
        a
    };
    Ok(RbbStep {
        alpha: bounds.clamp(raw),
        bb1: a,
        bb2: b,
        alpha_new: c,
        nu,
        took_window_max: take_max,
        negative_curvature: false,
    })
}

/// Plain BB1 with the same negative-curvature fallback and clamp.
pub fn bb1_select(p: &DisplacementPair, bounds: &StepBounds) -> RbbStep {
    let a = bb1(p);
    let negative = !p.has_positive_curvature();
    let raw = if negative {
        negative_curvature_fallback(p, bounds)
    } else {
        a
    };
    RbbStep {
        alpha: bounds.clamp(raw),
        bb1: a,
        bb2: if p.sy != 0.0 { p.yy / p.sy } else { f64::NAN },
        alpha_new: raw,
        nu: 0.0,
        took_window_max: false,
        negative_curvature: negative,
    }
}
