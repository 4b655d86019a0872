use std::fmt;

use thiserror::Error;

/// Errors produced anywhere in the model pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The scenario document could not be read as JSON or has the wrong shape.
    #[error("malformed scenario: {0}")]
    Malformed(String),

    /// A scenario field violates its constraint.
    #[error("{field}: {message}")]
    Constraint {
        field: &'static str,
        message: String,
    },

    /// A distribution was given shape parameters it cannot accept.
    #[error("invalid distribution shape: {0}")]
    InvalidShape(String),

    /// An argument is outside the domain of the operation.
    #[error("{0}")]
    Domain(String),

    /// The bracketing root finder ran out of iterations.
    #[error("threshold solver did not converge after {iterations} iterations (bracket [{lo}, {hi}], residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    /// Both group means are zero; no threshold exists.
    #[error("both group means are zero; the threshold is undefined")]
    DegenerateState,

    /// Fixed-point iteration failed to settle.
    #[error("fixed-point refinement did not converge after {iterations} iterations (residual {residual:e}, last iterate ({mu_c}, {mu_nc}))")]
    RefineFailed {
        iterations: usize,
        residual: f64,
        mu_c: f64,
        mu_nc: f64,
    },

    /// A trajectory left the admissible range.
    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },
}

impl Error {
    pub(crate) fn constraint(field: &'static str, message: impl fmt::Display) -> Self {
        Error::Constraint {
            field,
            message: message.to_string(),
        }
    }

    /// True for failures of the numeric machinery, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::DegenerateState
                | Error::RefineFailed { .. }
                | Error::Diverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
