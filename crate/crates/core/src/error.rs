use thiserror::Error;

use crate::models::ParameterPoint;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A matrix that must be inverted is singular at the configured
    /// relative singular-value cutoff.
    #[error("rank deficiency in {context}: smallest/largest singular value {ratio:e} below {rank_eps:e}{advice}")]
    RankDeficient {
        context: &'static str,
        ratio: f64,
        rank_eps: f64,
        advice: &'static str,
    },

    /// Sample outside the support of the true distribution (absolute
    /// continuity with respect to the true measure fails).
    #[error("sample {sample:?} is outside the support of the true distribution")]
    Support { sample: Vec<f64> },

    /// E[pi(theta1) pi(theta2)] is infinite: the likelihood ratios are not
    /// square integrable under the true distribution.
    #[error("square-integrability postulate violated: E[pi({theta1}) pi({theta2})] is infinite")]
    PostulateViolation {
        theta1: ParameterPoint,
        theta2: ParameterPoint,
    },

    #[error("parameter {theta} outside the model domain: {reason}")]
    Domain { theta: ParameterPoint, reason: String },

    #[error("moment mode error: {0}")]
    Mode(String),

    #[error("Monte Carlo diagnostics: {0}")]
    Diagnostics(String),
}
