//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scenario construction, planning, and optimization.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A scenario or config document failed invariant validation.
    /// Each entry names one violated invariant.
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    /// The instance exceeds a hard size cap of the requested algorithm.
    #[error("problem too large: {0}")]
    TooLarge(String),

    /// The requested channel regime has no valid closed-form branch.
    #[error("infeasible Rician regime: {0}")]
    InfeasibleRicianRegime(String),

    /// The input (e.g. a tour) admits no feasible solution.
    #[error("infeasible input: {0}")]
    InfeasibleInput(String),

    /// An iterative numeric routine failed to converge. Optimizers attach
    /// their best iterate so callers can inspect how far they got.
    #[error("numeric failure: {message}")]
    NumericFailure {
        message: String,
        best: Option<Box<crate::velocity::OptimizationReport>>,
    },

    /// A structured-text document could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
