//! The RBB trust-region driver (RBBTR, RBBTRe, BBTR) and the GBB baseline.
//!
//! One *cycle* is one subproblem solve plus one trial evaluation. A cycle
//! whose ratio clears `η₁` moves the iterate (an outer iteration); otherwise
//! the iterate stays put and the cycle counts as an inner cycle. Iteration
//! budgets count both.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{all_finite, dot, norm, norm_inf, sub_into};
use crate::problems::Objective;
use crate::stepsize::{bb1_select, rbb_select, DisplacementPair, StepBounds, StepsizeWindow};
use crate::trust::{
    nonmonotone_ratio, predicted_reduction, step_length, NonmonotoneMemory, RadiusPolicy,
    TauRule, TrustState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Trust region with RBB step-size, `τ = Δ^{−m}`.
    Rbbtr,
    /// Trust region with RBB step-size, `τ = a^{−Δ}`.
    Rbbtre,
    /// Trust region with plain BB1.
    Bbtr,
    /// BB1 with non-monotone backtracking line search.
    Gbb,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Gbb, Variant::Bbtr, Variant::Rbbtr, Variant::Rbbtre];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Rbbtr => "rbbtr",
            Variant::Rbbtre => "rbbtre",
            Variant::Bbtr => "bbtr",
            Variant::Gbb => "gbb",
        }
    }

    pub fn default_tau_rule(&self) -> TauRule {
        match self {
            Variant::Rbbtre => TauRule::EXPONENTIAL,
            _ => TauRule::INVERSE,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbbtr" => Ok(Variant::Rbbtr),
            "rbbtre" => Ok(Variant::Rbbtre),
            "bbtr" => Ok(Variant::Bbtr),
            "gbb" => Ok(Variant::Gbb),
            other => Err(invalid("variant", format!("unknown variant `{other}`"))),
        }
    }
}

/// Length of the very first step, before any displacement pair exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStep {
    Fixed { t: f64 },
    /// `t₁ = 1/‖g₁‖_∞`
    InverseGradInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    /// `‖g_k‖ ≤ ε‖g₁‖`
    Relative { eps: f64 },
    /// `‖g_k‖ ≤ ε(1 + |f_k|)`
    Scaled { eps: f64 },
    /// `‖g_k‖ < ε₁‖g₁‖`, or an accepted step with `|f_k − f_{k+1}| ≤ ε₂` or
    /// `‖x_k − x_{k+1}‖ ≤ ε₂`.
    Composite { eps1: f64, eps2: f64 },
}

impl StoppingRule {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StoppingRule::Relative { eps } | StoppingRule::Scaled { eps } => eps >= 0.0,
            StoppingRule::Composite { eps1, eps2 } => eps1 >= 0.0 && eps2 >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("stopping", "tolerances must be non-negative"))
        }
    }

    fn gradient_test(&self, g_norm: f64, g1_norm: f64, f: f64) -> bool {
        match *self {
            StoppingRule::Relative { eps } => g_norm <= eps * g1_norm,
            StoppingRule::Scaled { eps } => g_norm <= eps * (1.0 + f.abs()),
            StoppingRule::Composite { eps1, .. } => g_norm < eps1 * g1_norm,
        }
    }

    fn progress_test(&self, f_old: f64, f_new: f64, step_norm: f64) -> bool {
        match *self {
            StoppingRule::Composite { eps2, .. } => {
                (f_old - f_new).abs() <= eps2 || step_norm <= eps2
            }
            _ => false,
        }
    }
}

/// All tunables of the trust-region driver and the GBB baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub radius_policy: RadiusPolicy,
    pub tau_rule: TauRule,
    /// Initial radius `Δ₁`.
    pub delta0: f64,
    /// `ϱ`: the step-size window holds `ϱ + 1` values.
    pub rho_window: usize,
    /// `M`: the non-monotone reference is the max of the last `M + 1` values.
    pub memory: usize,
    pub bounds: StepBounds,
    pub initial_step: InitialStep,
    pub stopping: StoppingRule,
    /// Budget on outer iterations plus inner cycles.
    pub max_iter: usize,
    pub max_feval: usize,
    /// Consecutive rejected cycles allowed at one iterate.
    pub max_inner_cycles: usize,
    /// GBB sufficient-decrease constant.
    pub gbb_gamma: f64,
    /// GBB backtracking factor.
    pub gbb_sigma: f64,
    pub gbb_max_backtracks: usize,
}

impl SolverConfig {
    /// Defaults of the large-scale experiments for `variant`.
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            variant,
            radius_policy: RadiusPolicy::default(),
            tau_rule: variant.default_tau_rule(),
            delta0: 1.0,
            rho_window: 3,
            memory: 20,
            bounds: StepBounds::default(),
            initial_step: InitialStep::InverseGradInf,
            stopping: StoppingRule::Scaled { eps: 1e-6 },
            max_iter: 20_000,
            max_feval: 1_000_000,
            max_inner_cycles: 100,
            gbb_gamma: 1e-4,
            gbb_sigma: 0.5,
            gbb_max_backtracks: 50,
        }
    }

    /// Uses the three-case radius rule in place of the five-case one.
    pub fn with_classic_radius(mut self) -> Self {
        let p = self.radius_policy;
        self.radius_policy = RadiusPolicy::classic(p.eta1, p.eta2, p.alpha1, p.alpha2)
            .expect("orderings already validated");
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.radius_policy.validate()?;
        self.tau_rule.validate()?;
        self.bounds.validate()?;
        self.stopping.validate()?;
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(invalid("delta0", "must be positive and finite"));
        }
        if let InitialStep::Fixed { t } = self.initial_step {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("initial_step", "t₁ must be positive"));
            }
        }
        if self.max_iter == 0 || self.max_feval == 0 || self.max_inner_cycles == 0 {
            return Err(invalid("budgets", "must be positive"));
        }
        if !(self.gbb_gamma > 0.0 && self.gbb_gamma < 1.0) {
            return Err(invalid("gbb_gamma", "must lie in (0, 1)"));
        }
        if !(self.gbb_sigma > 0.0 && self.gbb_sigma < 1.0) {
            return Err(invalid("gbb_sigma", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn initial_alpha(&self, g: &[f64]) -> f64 {
        let t = match self.initial_step {
            InitialStep::Fixed { t } => t,
            InitialStep::InverseGradInf => 1.0 / norm_inf(g),
        };
        self.bounds.clamp(1.0 / t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
    FevalLimit,
    NumericalFailure,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::IterationLimit => "iteration_limit",
            RunStatus::FevalLimit => "feval_limit",
            RunStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(RunStatus::Converged),
            "iteration_limit" => Ok(RunStatus::IterationLimit),
            "feval_limit" => Ok(RunStatus::FevalLimit),
            "numerical_failure" => Ok(RunStatus::NumericalFailure),
            other => Err(invalid("status", format!("unknown status `{other}`"))),
        }
    }
}

/// One cycle (trust region) or one iteration (GBB).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// Objective at the current iterate, before the cycle.
    pub f: f64,
    pub f_trial: f64,
    /// Non-monotone reference value used for acceptance.
    pub f_ref: f64,
    pub gnorm: f64,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub alpha: f64,
    pub rho: Option<f64>,
    pub pred: Option<f64>,
    pub step_norm: f64,
    pub accepted: bool,
    /// Accepted by the inner-cycle cap despite `ρ < η₁`.
    pub forced: bool,
    pub backtracks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub variant: Variant,
    pub status: RunStatus,
    pub outer_iterations: usize,
    pub inner_cycles: usize,
    pub function_evals: usize,
    pub gradient_evals: usize,
    pub wall_time: f64,
    pub initial_f: f64,
    pub initial_gnorm: f64,
    pub final_f: f64,
    pub final_gnorm: f64,
    pub final_x: Vec<f64>,
    /// Times the inner-cycle cap fired.
    pub inner_cap_hits: usize,
    pub trace: Vec<TraceRow>,
}

impl RunReport {
    pub fn total_iterations(&self) -> usize {
        self.outer_iterations + self.inner_cycles
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Reference values at accepted cycles, in order.
    pub fn reference_sequence(&self) -> Vec<f64> {
        self.trace
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.f_ref)
            .collect()
    }
}

struct Iterate {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    g_norm: f64,
}

struct Counters {
    fevals: usize,
    gevals: usize,
}

fn start(f: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<(Iterate, Counters)> {
    cfg.validate()?;
    if x0.len() != f.dimension() {
        return Err(Error::DimensionMismatch {
            expected: f.dimension(),
            got: x0.len(),
        });
    }
    if !all_finite(x0) {
        return Err(Error::NonFinite("starting point"));
    }
    let mut g = vec![0.0; x0.len()];
    let fx = f.value_and_gradient(x0, &mut g);
    let g_norm = norm(&g);
    Ok((
        Iterate {
            x: x0.to_vec(),
            f: fx,
            g,
            g_norm,
        },
        Counters {
            fevals: 1,
            gevals: 1,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    f: &dyn Objective,
    cfg: &SolverConfig,
    status: RunStatus,
    it: Iterate,
    counters: Counters,
    initial: (f64, f64),
    trace: Vec<TraceRow>,
    inner_cap_hits: usize,
    started: Instant,
) -> RunReport {
    let outer = trace.iter().filter(|r| r.accepted).count();
    let inner = trace.len() - outer;
    RunReport {
        problem: f.name(),
        variant: cfg.variant,
        status,
        outer_iterations: outer,
        inner_cycles: inner,
        function_evals: counters.fevals,
        gradient_evals: counters.gevals,
        wall_time: started.elapsed().as_secs_f64(),
        initial_f: initial.0,
        initial_gnorm: initial.1,
        final_f: it.f,
        final_gnorm: it.g_norm,
        final_x: it.x,
        inner_cap_hits,
        trace,
    }
}

/// Runs the configured method: [`Variant::Gbb`] dispatches to [`gbb_minimize`],
/// every other variant to the trust-region driver.
pub fn minimize(f: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<RunReport> {
    if cfg.variant == Variant::Gbb {
        return gbb_minimize(f, x0, cfg);
    }
    let started = Instant::now();
    let (mut it, mut counters) = start(f, x0, cfg)?;
    let initial = (it.f, it.g_norm);
    let g1_norm = it.g_norm;
    let mut trace = Vec::new();

    if !(it.f.is_finite() && it.g_norm.is_finite()) {
        return Ok(finish(f, cfg, RunStatus::NumericalFailure, it, counters, initial, trace, 0, started));
    }

    let policy = cfg.radius_policy;
    let mut trust = TrustState::new(cfg.delta0, cfg.tau_rule)?;
    let mut memory = NonmonotoneMemory::new(cfg.memory);
    memory.push(it.f);
    let mut window = StepsizeWindow::new(cfg.rho_window);
    let mut pair: Option<DisplacementPair> = None;
    let first_alpha = cfg.initial_alpha(&it.g);

    let mut trial_x = vec![0.0; it.x.len()];
    let mut trial_g = vec![0.0; it.x.len()];
    let mut step = vec![0.0; it.x.len()];
    let mut scratch = Vec::with_capacity(it.x.len());
    // best rejected trial at the current iterate: (f, x)
    let mut best_rejected: Option<(f64, Vec<f64>)> = None;
    let mut cycles_here = 0usize;
    let mut inner_cap_hits = 0usize;
    let mut last_ref = f64::INFINITY;

    let status = loop {
        if it.g_norm == 0.0 || cfg.stopping.gradient_test(it.g_norm, g1_norm, it.f) {
            break RunStatus::Converged;
        }
        if trace.len() >= cfg.max_iter {
            break RunStatus::IterationLimit;
        }
        if counters.fevals >= cfg.max_feval {
            break RunStatus::FevalLimit;
        }

        let alpha = match (&pair, cfg.variant) {
            (None, _) => first_alpha,
            (Some(p), Variant::Bbtr) => bb1_select(p, &cfg.bounds).alpha,
            (Some(p), _) => rbb_select(p, trust.tau(), &mut window, &cfg.bounds)?.alpha,
        };
        let delta = trust.delta();
        let (t, _) = step_length(it.g_norm, alpha, delta);
        for (si, gi) in step.iter_mut().zip(&it.g) {
            *si = -t * gi;
        }
        let step_norm = t * it.g_norm;
        let pred = predicted_reduction(it.g_norm, alpha, delta);
        let f_ref = memory.reference()?;
        debug_assert!(f_ref <= last_ref, "reference value increased");
        last_ref = f_ref;

        let (f_trial, rho) = match f.retract(&it.x, &step, &mut trial_x) {
            Ok(()) => {
                let ft = f.value(&trial_x);
                counters.fevals += 1;
                (ft, nonmonotone_ratio(f_ref, ft, pred)?)
            }
            Err(_) => (f64::NAN, f64::NEG_INFINITY),
        };
        let accepted = rho >= policy.eta1;
        trace.push(TraceRow {
            f: it.f,
            f_trial,
            f_ref,
            gnorm: it.g_norm,
            delta: Some(delta),
            tau: Some(trust.tau()),
            alpha,
            rho: Some(rho),
            pred: Some(pred),
            step_norm,
            accepted,
            forced: false,
            backtracks: 0,
        });
        trust.update(rho, &policy);

        let mut take_point = accepted;
        if !accepted {
            cycles_here += 1;
            if f_trial.is_finite()
                && f_trial < it.f
                && best_rejected.as_ref().is_none_or(|(fb, _)| f_trial < *fb)
            {
                best_rejected = Some((f_trial, trial_x.clone()));
            }
            if cycles_here >= cfg.max_inner_cycles {
                inner_cap_hits += 1;
                match best_rejected.take() {
                    Some((fb, xb)) => {
                        warn!(
                            "{}: inner-cycle cap ({}) hit, forcing best trial f = {fb:e}",
                            f.name(),
                            cfg.max_inner_cycles
                        );
                        trial_x.copy_from_slice(&xb);
                        let row = trace.last_mut().expect("row just pushed");
                        row.f_trial = fb;
                        row.accepted = true;
                        row.forced = true;
                        take_point = true;
                    }
                    None => {
                        warn!(
                            "{}: inner-cycle cap ({}) hit without any decrease",
                            f.name(),
                            cfg.max_inner_cycles
                        );
                        break RunStatus::NumericalFailure;
                    }
                }
            }
        }
        if !take_point {
            continue;
        }

        let f_new = f.value_and_gradient(&trial_x, &mut trial_g);
        counters.gevals += 1;
        if !(f_new.is_finite() && all_finite(&trial_g)) {
            break RunStatus::NumericalFailure;
        }
        sub_into(&trial_x, &it.x, &mut scratch);
        let moved = norm(&scratch);
        let s_vec = scratch.clone();
        sub_into(&trial_g, &it.g, &mut scratch);
        match DisplacementPair::new(s_vec, scratch.clone()) {
            Ok(p) => pair = Some(p),
            Err(e) => debug!("keeping previous pair: {e}"),
        }
        let f_old = it.f;
        std::mem::swap(&mut it.x, &mut trial_x);
        std::mem::swap(&mut it.g, &mut trial_g);
        it.f = f_new;
        it.g_norm = norm(&it.g);
        memory.push(it.f);
        window.advance();
        cycles_here = 0;
        best_rejected = None;

        if cfg.stopping.progress_test(f_old, it.f, moved) {
            break RunStatus::Converged;
        }
    };

    Ok(finish(f, cfg, status, it, counters, initial, trace, inner_cap_hits, started))
}

/// BB1 gradient method with Grippo-Lampariello-Lucidi non-monotone backtracking.
pub fn gbb_minimize(f: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<RunReport> {
    let started = Instant::now();
    let (mut it, mut counters) = start(f, x0, cfg)?;
    let initial = (it.f, it.g_norm);
    let g1_norm = it.g_norm;
    let mut trace = Vec::new();

    if !(it.f.is_finite() && it.g_norm.is_finite()) {
        return Ok(finish(f, cfg, RunStatus::NumericalFailure, it, counters, initial, trace, 0, started));
    }

    let mut memory = NonmonotoneMemory::new(cfg.memory);
    memory.push(it.f);
    let mut alpha = cfg.initial_alpha(&it.g);
    let n = it.x.len();
    let mut dir = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut trial_x = vec![0.0; n];
    let mut trial_g = vec![0.0; n];
    let mut scratch = Vec::with_capacity(n);

    let status = 'outer: loop {
        if it.g_norm == 0.0 || cfg.stopping.gradient_test(it.g_norm, g1_norm, it.f) {
            break RunStatus::Converged;
        }
        if trace.len() >= cfg.max_iter {
            break RunStatus::IterationLimit;
        }
        if counters.fevals >= cfg.max_feval {
            break RunStatus::FevalLimit;
        }
        for (d, g) in dir.iter_mut().zip(&it.g) {
            *d = -g / alpha;
        }
        let slope = dot(&it.g, &dir);
        let f_ref = memory.reference()?;
        let mut lambda = 1.0;
        let mut backtracks = 0;
        let f_trial = loop {
            for (s, d) in step.iter_mut().zip(&dir) {
                *s = lambda * d;
            }
            if f.retract(&it.x, &step, &mut trial_x).is_ok() {
                let ft = f.value(&trial_x);
                counters.fevals += 1;
                if ft.is_finite() && ft <= f_ref + cfg.gbb_gamma * lambda * slope {
                    break ft;
                }
            }
            if backtracks >= cfg.gbb_max_backtracks {
                warn!("{}: line search failed after {backtracks} backtracks", f.name());
                break 'outer RunStatus::NumericalFailure;
            }
            if counters.fevals >= cfg.max_feval {
                break 'outer RunStatus::FevalLimit;
            }
            lambda *= cfg.gbb_sigma;
            backtracks += 1;
        };
        f.gradient(&trial_x, &mut trial_g);
        counters.gevals += 1;
        if !all_finite(&trial_g) {
            break RunStatus::NumericalFailure;
        }
        sub_into(&trial_x, &it.x, &mut scratch);
        let moved = norm(&scratch);
        trace.push(TraceRow {
            f: it.f,
            f_trial,
            f_ref,
            gnorm: it.g_norm,
            delta: None,
            tau: None,
            alpha,
            rho: None,
            pred: None,
            step_norm: moved,
            accepted: true,
            forced: false,
            backtracks,
        });
        let s_vec = scratch.clone();
        sub_into(&trial_g, &it.g, &mut scratch);
        if let Ok(p) = DisplacementPair::new(s_vec, scratch.clone()) {
            alpha = bb1_select(&p, &cfg.bounds).alpha;
        }
        let f_old = it.f;
        std::mem::swap(&mut it.x, &mut trial_x);
        std::mem::swap(&mut it.g, &mut trial_g);
        it.f = f_trial;
        it.g_norm = norm(&it.g);
        memory.push(it.f);
        if cfg.stopping.progress_test(f_old, it.f, moved) {
            break RunStatus::Converged;
        }
    };

    Ok(finish(f, cfg, status, it, counters, initial, trace, 0, started))
}
