use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {n} for {what}: {reason}")]
    InvalidDimension {
        what: String,
        n: usize,
        reason: &'static str,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("displacement s is zero")]
    ZeroDisplacement,

    #[error("sᵀy is zero; BB2 undefined")]
    ZeroCurvature,

    #[error("sᵀy = {0} is not positive")]
    NonPositiveCurvature(f64),

    #[error("predicted reduction {0} is not positive")]
    NonPositivePrediction(f64),

    #[error("gradient is zero")]
    ZeroGradient,

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate retraction: point {0} mapped to the origin")]
    DegenerateRetraction(usize),

    #[error("eigensolver did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("argument {0} outside [-1, 1]")]
    OutOfDomain(f64),

    #[error("empty non-monotone memory")]
    EmptyMemory,
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
