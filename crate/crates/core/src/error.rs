use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("metric is singular at {0:?}")]
    Singular(Vec<f64>),
    #[error("chart has no Walker structure")]
    NotWalker,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("integration step underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("trajectory left the chart domain at t = {t}")]
    LeftDomain { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or a
    /// mathematical validation failure).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Eval(_)
                | Error::Singular(_)
                | Error::StepUnderflow { .. }
                | Error::LeftDomain { .. }
                | Error::TooManySteps { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
