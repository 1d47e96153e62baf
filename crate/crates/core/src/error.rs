use thiserror::Error;

/// Errors produced by the essrate library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("objective is not twice differentiable at x = {at:?}")]
    NonSmooth { at: Vec<f64> },

    #[error("objective `{0}` has no registered optimum")]
    NoOptimum(String),

    #[error("dynamics `{model}` is singular at t = {t}")]
    SingularTime { model: String, t: f64 },

    #[error("matrix A(t) is singular at t = {t}")]
    SingularMatrix { t: f64 },

    #[error("eigensolver did not converge within {max_iter} iterations")]
    EigenNonConvergence { max_iter: usize },

    #[error("metric `{metric}` is not defined for dynamics `{model}`")]
    MetricUnavailable { metric: String, model: String },

    #[error("non-finite value in stage or state at step {step}")]
    Diverged { step: usize },

    #[error("no stable step at t = {t}: h_floor = {h_floor} is outside the stability domain")]
    StabilityImpossible { t: f64, h_floor: f64 },

    #[error("step count exceeded {limit} without meeting a stop condition")]
    StepOverflow { limit: usize },

    #[error("backtracking exceeded {limit} reductions at step {step}")]
    NoDescent { step: usize, limit: usize },

    #[error("trajectory too short: need {need} tail records, have {have}")]
    TooShort { need: usize, have: usize },

    #[error("fit window has {have} usable points, need at least {need}")]
    WindowTooShort { need: usize, have: usize },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
