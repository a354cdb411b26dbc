use thiserror::Error;

use crate::market::Interpretation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid market parameters: {0}")]
    InvalidParams(String),

    #[error("invalid allocation strategy: {0}")]
    InvalidStrategy(String),

    #[error("{interp} interpretation requires a constant strategy, got {strategy}")]
    InterpretationMismatch {
        interp: Interpretation,
        strategy: String,
    },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("integrand evaluation failed at t = {t}: {reason}")]
    EvaluationFailure { t: f64, reason: String },

    #[error("integrand has no adapted x instantly-independent decomposition: {0}")]
    NotDecomposable(String),

    #[error("{0} interpretation is not supported by this operation")]
    UnsupportedInterpretation(Interpretation),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("sample count must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
