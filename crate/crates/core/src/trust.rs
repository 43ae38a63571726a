//! Trust-region mechanics for the scalar model `f + gᵀs + ½·α·sᵀs`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Upper cap on the radius, so that `τ = a^{−Δ}` stays representable.
pub const DELTA_CAP: f64 = 1e12;

/// Predicted reductions below this count as a failed cycle.
pub const PRED_UNDERFLOW: f64 = 1e-300;

/// Schedule coupling the regularization parameter `τ` to the radius `Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TauRule {
    /// `τ = Δ^{−m}`, `m ≥ 1`.
    Inverse { m: u32 },
    /// `τ = a^{−Δ}`, `a > 1`.
    Exponential { a: f64 },
}

impl TauRule {
    pub const INVERSE: TauRule = TauRule::Inverse { m: 1 };
    pub const EXPONENTIAL: TauRule = TauRule::Exponential {
        a: std::f64::consts::E,
    };

    pub fn validate(&self) -> Result<()> {
        match *self {
            TauRule::Inverse { m } if m < 1 => Err(invalid("m", "exponent must be ≥ 1")),
            TauRule::Exponential { a } if !(a > 1.0 && a.is_finite()) => {
                Err(invalid("a", format!("base must exceed 1, got {a}")))
            }
            _ => Ok(()),
        }
    }

    pub fn tau(&self, delta: f64) -> f64 {
        match *self {
            TauRule::Inverse { m } => delta.powi(-(m as i32)),
            TauRule::Exponential { a } => (-delta * a.ln()).exp(),
        }
    }
}

/// `τ` for radius `delta` under `rule`.
pub fn update_tau(delta: f64, rule: &TauRule) -> Result<f64> {
    rule.validate()?;
    if !(delta > 0.0) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    Ok(rule.tau(delta))
}

/// Radius `Δ` and regularization `τ`; `τ` is re-derived on every radius change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    delta: f64,
    tau: f64,
    rule: TauRule,
}

impl TrustState {
    pub fn new(delta: f64, rule: TauRule) -> Result<Self> {
        let tau = update_tau(delta, &rule)?;
        let mut s = Self { delta, tau, rule };
        s.set_delta(delta);
        Ok(s)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rule(&self) -> TauRule {
        self.rule
    }

    pub fn set_delta(&mut self, delta: f64) {
        debug_assert!(delta > 0.0);
        self.delta = delta.min(DELTA_CAP);
        self.tau = self.rule.tau(self.delta);
    }

    /// Applies the radius update for ratio `rho` and refreshes `τ`.
    pub fn update(&mut self, rho: f64, policy: &RadiusPolicy) {
        self.set_delta(update_radius(rho, self.delta, policy));
    }
}

/// Thresholds `η₄ ≤ η₁ ≤ η₂ < 1 < η₃` and factors `α₄ ≤ α₁ < 1 < α₃ ≤ α₂`
/// for the five-case radius update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusPolicy {
    pub eta4: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub alpha4: f64,
    pub alpha1: f64,
    pub alpha3: f64,
    pub alpha2: f64,
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        Self {
            eta4: 0.001,
            eta1: 0.1,
            eta2: 0.75,
            eta3: 1.5,
            alpha4: 0.25,
            alpha1: 0.5,
            alpha3: 1.5,
            alpha2: 2.0,
        }
    }
}

impl RadiusPolicy {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        eta4: f64,
        eta1: f64,
        eta2: f64,
        eta3: f64,
        alpha4: f64,
        alpha1: f64,
        alpha3: f64,
        alpha2: f64,
    ) -> Result<Self> {
        let p = Self {
            eta4,
            eta1,
            eta2,
            eta3,
            alpha4,
            alpha1,
            alpha3,
            alpha2,
        };
        p.validate()?;
        Ok(p)
    }

    /// The three-case rule: no "too failed" or "too successful" branch.
    pub fn classic(eta1: f64, eta2: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        Self::new(0.0, eta1, eta2, f64::INFINITY, alpha1, alpha1, alpha2, alpha2)
    }

    /// [`RadiusPolicy::default`] with its extreme cases collapsed.
    pub fn classic_default() -> Self {
        let d = Self::default();
        Self::classic(d.eta1, d.eta2, d.alpha1, d.alpha2).expect("default orderings hold")
    }

    pub fn is_classic(&self) -> bool {
        self.eta4 == 0.0
            && self.eta3 == f64::INFINITY
            && self.alpha4 == self.alpha1
            && self.alpha3 == self.alpha2
    }

    pub fn validate(&self) -> Result<()> {
        let etas_ok = 0.0 <= self.eta4
            && self.eta4 <= self.eta1
            && 0.0 < self.eta1
            && self.eta1 <= self.eta2
            && self.eta2 < 1.0
            && 1.0 < self.eta3;
        if !etas_ok {
            return Err(invalid(
                "eta",
                format!(
                    "need 0 ≤ η4 ≤ η1 ≤ η2 < 1 < η3 with η1 > 0, got η4={} η1={} η2={} η3={}",
                    self.eta4, self.eta1, self.eta2, self.eta3
                ),
            ));
        }
        let alphas_ok = 0.0 < self.alpha4
            && self.alpha4 <= self.alpha1
            && self.alpha1 < 1.0
            && 1.0 < self.alpha3
            && self.alpha3 <= self.alpha2
            && self.alpha2.is_finite();
        if !alphas_ok {
            return Err(invalid(
                "alpha",
                format!(
                    "need 0 < α4 ≤ α1 < 1 < α3 ≤ α2, got α4={} α1={} α3={} α2={}",
                    self.alpha4, self.alpha1, self.alpha3, self.alpha2
                ),
            ));
        }
        Ok(())
    }
}

/// Five-case radius update. NaN ratios are treated as failures.
pub fn update_radius(rho: f64, delta: f64, policy: &RadiusPolicy) -> f64 {
    let factor = if rho.is_nan() || rho < policy.eta4 {
        policy.alpha4
    } else if rho < policy.eta1 {
        policy.alpha1
    } else if rho < policy.eta2 {
        1.0
    } else if rho < policy.eta3 {
        policy.alpha2
    } else {
        policy.alpha3
    };
    factor * delta
}

/// Closed-form minimizer `s = −t·g` of the scalar model in the ball `‖s‖ ≤ Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemStep {
    pub s: Vec<f64>,
    pub t: f64,
    /// True when the radius, not `1/α`, limited the step.
    pub boundary: bool,
}

/// Step length `t = min{1/α, Δ/‖g‖}` and whether the boundary is active.
#[inline]
pub fn step_length(g_norm: f64, alpha: f64, delta: f64) -> (f64, bool) {
    let interior = 1.0 / alpha;
    let boundary = delta / g_norm;
    if boundary < interior {
        (boundary, true)
    } else {
        (interior, false)
    }
}

pub fn solve_subproblem(g: &[f64], alpha: f64, delta: f64) -> Result<SubproblemStep> {
    let g_norm = crate::linalg::norm(g);
    if g_norm == 0.0 {
        return Err(Error::ZeroGradient);
    }
    if !(alpha > 0.0 && delta > 0.0) {
        return Err(invalid("alpha/delta", "must be positive"));
    }
    let (t, boundary) = step_length(g_norm, alpha, delta);
    Ok(SubproblemStep {
        s: g.iter().map(|v| -t * v).collect(),
        t,
        boundary,
    })
}

/// Model decrease `m(x) − m(x + s)` for the closed-form step.
///
/// With `r = min{Δ, ‖g‖/α}` this is `‖g‖·r·(1 − ½·α·r/‖g‖)`, which equals
/// `‖g‖²/(2α)` in the interior and `Δ‖g‖ − ½αΔ²` on the boundary, and is never
/// below `½‖g‖·r`.
pub fn predicted_reduction(g_norm: f64, alpha: f64, delta: f64) -> f64 {
    let r = delta.min(g_norm / alpha);
    let shrink = 1.0 - 0.5 * (alpha * r / g_norm).min(1.0);
    g_norm * r * shrink
}

/// Non-monotone ratio `(f_ref − f_trial) / pred`.
///
/// `pred` below [`PRED_UNDERFLOW`] yields `−∞` (a failed cycle).
pub fn nonmonotone_ratio(f_ref: f64, f_trial: f64, pred: f64) -> Result<f64> {
    if !(pred > 0.0) {
        return Err(Error::NonPositivePrediction(pred));
    }
    if pred < PRED_UNDERFLOW || !f_trial.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((f_ref - f_trial) / pred)
}

/// The last `M + 1` accepted objective values; the reference value is their max.
#[derive(Debug, Clone)]
pub struct NonmonotoneMemory {
    history: VecDeque<f64>,
    m: usize,
}

impl NonmonotoneMemory {
    pub fn new(m: usize) -> Self {
        Self {
            history: VecDeque::with_capacity(m + 1),
            m,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn push(&mut self, f: f64) {
        if self.history.len() == self.m + 1 {
            self.history.pop_front();
        }
        self.history.push_back(f);
    }

    pub fn reference(&self) -> Result<f64> {
        self.history
            .iter()
            .copied()
            .reduce(f64::max)
            .ok_or(Error::EmptyMemory)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn subproblem_cases() {
        let s = solve_subproblem(&[3.0, 4.0], 2.0, 10.0).unwrap();
        assert_eq!(s.t, 0.5);
        assert_eq!(s.s, vec![-1.5, -2.0]);
        assert!(!s.boundary);

        let s = solve_subproblem(&[3.0, 4.0], 2.0, 1.0).unwrap();
        assert_eq!(s.t, 0.2);
        assert!((s.s[0] + 0.6).abs() < 1e-15 && (s.s[1] + 0.8).abs() < 1e-15);
        assert!((crate::linalg::norm(&s.s) - 1.0).abs() < 1e-15);
        assert!(s.boundary);

        let s = solve_subproblem(&[3.0, 4.0], 5.0, 1.0).unwrap();
        assert_eq!(s.t, 0.2);

        assert_eq!(
            solve_subproblem(&[0.0, 0.0], 1.0, 1.0),
            Err(Error::ZeroGradient)
        );
    }

    #[test]
    fn predicted_reduction_cases() {
        assert_eq!(predicted_reduction(5.0, 2.0, 10.0), 6.25);
        let p = predicted_reduction(5.0, 2.0, 1.0);
        assert_eq!(p, 4.0);
        assert!(p > 0.5 * 5.0 * 1.0);
        assert_eq!(predicted_reduction(1.0, 1.0, 10.0), 0.5);
    }

    #[test]
    fn ratio_cases() {
        assert_eq!(nonmonotone_ratio(10.0, 8.0, 4.0).unwrap(), 0.5);
        assert_eq!(nonmonotone_ratio(10.0, 10.0, 4.0).unwrap(), 0.0);
        let mut mem = NonmonotoneMemory::new(2);
        for f in [5.0, 3.0, 4.0] {
            mem.push(f);
        }
        let r = nonmonotone_ratio(mem.reference().unwrap(), 2.0, 2.0).unwrap();
        assert_eq!(r, 1.5);
        assert!(nonmonotone_ratio(1.0, 0.0, 0.0).is_err());
        assert_eq!(nonmonotone_ratio(1.0, 0.0, 1e-310).unwrap(), f64::NEG_INFINITY);
        assert_eq!(
            nonmonotone_ratio(1.0, f64::NAN, 1.0).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn radius_update_defaults() {
        let p = RadiusPolicy::default();
        assert_eq!(update_radius(0.0005, 1.0, &p), 0.25);
        assert_eq!(update_radius(0.05, 1.0, &p), 0.5);
        assert_eq!(update_radius(0.3, 1.0, &p), 1.0);
        assert_eq!(update_radius(1.0, 1.0, &p), 2.0);
        assert_eq!(update_radius(2.0, 1.0, &p), 1.5);
        assert_eq!(update_radius(f64::NEG_INFINITY, 1.0, &p), 0.25);
        assert_eq!(update_radius(f64::NAN, 1.0, &p), 0.25);
    }

    #[test]
    fn classic_preset_recovers_three_cases() {
        let p = RadiusPolicy::classic_default();
        assert!(p.is_classic());
        assert_eq!(update_radius(-5.0, 1.0, &p), 0.5);
        assert_eq!(update_radius(0.05, 1.0, &p), 0.5);
        assert_eq!(update_radius(0.3, 1.0, &p), 1.0);
        assert_eq!(update_radius(1e6, 1.0, &p), 2.0);
    }

    #[test]
    fn policy_validation() {
        assert!(RadiusPolicy::default().validate().is_ok());
        assert!(RadiusPolicy::new(0.2, 0.1, 0.75, 1.5, 0.25, 0.5, 1.5, 2.0).is_err());
        assert!(RadiusPolicy::new(0.001, 0.1, 0.75, 0.9, 0.25, 0.5, 1.5, 2.0).is_err());
        assert!(RadiusPolicy::new(0.001, 0.1, 0.75, 1.5, 0.25, 0.5, 2.5, 2.0).is_err());
        assert!(RadiusPolicy::new(0.001, 0.1, 0.75, 1.5, 0.0, 0.5, 1.5, 2.0).is_err());
    }

    #[test]
    fn tau_rules() {
        assert_eq!(update_tau(2.0, &TauRule::INVERSE).unwrap(), 0.5);
        let e = update_tau(1.0, &TauRule::EXPONENTIAL).unwrap();
        assert!((e - (-1.0f64).exp()).abs() < 1e-16);
        assert!((e - 0.367879).abs() < 1e-6);
        assert_eq!(update_tau(0.5, &TauRule::Inverse { m: 2 }).unwrap(), 4.0);
        let ex = update_tau(0.5, &TauRule::EXPONENTIAL).unwrap();
        let inv = update_tau(0.5, &TauRule::INVERSE).unwrap();
        assert!((ex - 0.6065).abs() < 1e-4 && ex < inv);
        assert!(update_tau(1.0, &TauRule::Inverse { m: 0 }).is_err());
        assert!(update_tau(1.0, &TauRule::Exponential { a: 1.0 }).is_err());
        assert!(update_tau(0.0, &TauRule::INVERSE).is_err());
    }

    #[test]
    fn trust_state_keeps_tau_coupled() {
        let mut st = TrustState::new(1.0, TauRule::INVERSE).unwrap();
        let p = RadiusPolicy::default();
        for rho in [0.0, 0.05, 0.3, 1.0, 2.0, -1.0] {
            st.update(rho, &p);
            assert_eq!(st.tau(), 1.0 / st.delta());
        }
        st.set_delta(1e20);
        assert_eq!(st.delta(), DELTA_CAP);
        let mut ex = TrustState::new(1.0, TauRule::EXPONENTIAL).unwrap();
        ex.set_delta(1e20);
        assert!(ex.tau() >= 0.0);
    }

    #[test]
    fn memory_window() {
        let mut m = NonmonotoneMemory::new(0);
        assert_eq!(m.reference(), Err(Error::EmptyMemory));
        m.push(5.0);
        assert_eq!(m.reference().unwrap(), 5.0);
        m.push(3.0);
        assert_eq!(m.reference().unwrap(), 3.0);

        let mut m = NonmonotoneMemory::new(2);
        for f in [5.0, 3.0, 4.0] {
            m.push(f);
        }
        assert_eq!(m.reference().unwrap(), 5.0);
        m.push(1.0);
        assert_eq!(m.reference().unwrap(), 4.0);
        assert_eq!(m.len(), 3);
    }

    /// Brute-force minimum of the model over a polar grid in the 2-D ball.
    fn grid_min(g: [f64; 2], alpha: f64, delta: f64) -> f64 {
        let model = |s: [f64; 2]| g[0] * s[0] + g[1] * s[1] + 0.5 * alpha * (s[0] * s[0] + s[1] * s[1]);
        let mut best = 0.0_f64;
        let steps = 400;
        for i in 0..=steps {
            let r = delta * i as f64 / steps as f64;
            for j in 0..720 {
                let th = std::f64::consts::TAU * j as f64 / 720.0;
                best = best.min(model([r * th.cos(), r * th.sin()]));
            }
        }
        best
    }

    #[test]
    fn closed_form_beats_grid() {
        for (g, alpha, delta) in [
            ([3.0, 4.0], 2.0, 10.0),
            ([3.0, 4.0], 2.0, 1.0),
            ([-0.3, 0.1], 0.01, 2.0),
            ([1.0, -2.0], 50.0, 0.5),
        ] {
            let sp = solve_subproblem(&g, alpha, delta).unwrap();
            let closed = -predicted_reduction(crate::linalg::norm(&g), alpha, delta);
            let direct = g[0] * sp.s[0] + g[1] * sp.s[1] + 0.5 * alpha * crate::linalg::dot(&sp.s, &sp.s);
            assert!((closed - direct).abs() <= 1e-12 * closed.abs());
            let grid = grid_min(g, alpha, delta);
            assert!(closed <= grid + 1e-12);
            assert!(closed >= grid - 1e-3 * grid.abs());
        }
    }

    proptest! {
        #[test]
        fn pred_lower_bound(
            g in prop::collection::vec(-100.0f64..100.0, 1..8),
            log_alpha in -8.0f64..8.0,
            log_delta in -8.0f64..8.0,
        ) {
            let gn = crate::linalg::norm(&g);
            prop_assume!(gn > 0.0);
            let alpha = 10f64.powf(log_alpha);
            let delta = 10f64.powf(log_delta);
            let pred = predicted_reduction(gn, alpha, delta);
            prop_assert!(pred >= 0.5 * gn * delta.min(gn / alpha));
        }

        #[test]
        fn feasibility(
            g in prop::collection::vec(-100.0f64..100.0, 1..8),
            log_alpha in -8.0f64..8.0,
            log_delta in -8.0f64..8.0,
        ) {
            prop_assume!(crate::linalg::norm(&g) > 0.0);
            let alpha = 10f64.powf(log_alpha);
            let delta = 10f64.powf(log_delta);
            let sp = solve_subproblem(&g, alpha, delta).unwrap();
            let sn = crate::linalg::norm(&sp.s);
            prop_assert!(sn <= delta * (1.0 + 4.0 * f64::EPSILON));
            if sp.boundary {
                prop_assert!((sn - delta).abs() <= 4.0 * f64::EPSILON * delta);
            } else {
                prop_assert!(sn < delta * (1.0 + 4.0 * f64::EPSILON));
            }
        }

        #[test]
        fn radius_update_is_multiplicative(rho in -2.0f64..3.0, delta in 1e-6f64..1e6, c in 1e-3f64..1e3) {
            let p = RadiusPolicy::default();
            let lhs = update_radius(rho, c * delta, &p);
            let rhs = c * update_radius(rho, delta, &p);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
        }
    }
}
