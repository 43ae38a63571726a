//! Trust-region minimization with a regularized Barzilai-Borwein (RBB) scalar
//! Hessian model.
//!
//! The trial step at iterate `x_k` minimizes the model
//! `f(x_k) + g_kᵀs + ½·α·sᵀs` over `‖s‖ ≤ Δ_k`, which has the closed form
//! `s = −min{1/α, Δ/‖g‖}·g`. The scalar `α` comes from a regularized BB
//! formula whose regularization parameter `τ` is tied to the radius `Δ`,
//! and acceptance uses a non-monotone (max of the last `M+1` values) ratio.
//!
//! Modules:
//! - [`problems`]: the [`Objective`] trait, test functions and a finite-difference checker.
//! - [`stepsize`]: BB1/BB2, the regularized step-size and the adaptive alternation.
//! - [`trust`]: subproblem solution, predicted reduction, radius and `τ` updates.
//! - [`solver`]: the trust-region driver and a non-monotone line-search BB baseline.
//! - [`spherical`]: the spherical t-design objective and its singular-value certificate.

// `!(a <= b)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod problems;
pub mod solver;
pub mod spherical;
pub mod stepsize;
pub mod trust;

pub use error::{Error, Result};
pub use problems::{check_gradient, Objective, Problem, ProblemKind};
pub use solver::{gbb_minimize, minimize, RunReport, RunStatus, SolverConfig, StoppingRule, Variant};
pub use stepsize::{DisplacementPair, StepBounds, StepsizeWindow};
pub use trust::{NonmonotoneMemory, RadiusPolicy, TauRule, TrustState};
