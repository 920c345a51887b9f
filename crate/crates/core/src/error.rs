use std::fmt;

use thiserror::Error;

use crate::newton::NewtonTrace;
use crate::projection::ProjectionResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index error: {0}")]
    Index(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("determinant space too large: binomial({n_orbitals}, {n_electrons}) = {dimension} exceeds cap {cap}; use a smaller system")]
    CapExceeded { n_orbitals: usize, n_electrons: usize, dimension: usize, cap: usize },

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("projection did not converge after {iterations} iterations (gradient norm {gradient_norm:.3e} > {tolerance:.3e})")]
    ProjectionNotConverged { iterations: usize, gradient_norm: f64, tolerance: f64, best: Box<ProjectionResult> },

    #[error("{reason}")]
    NewtonFailed { reason: NewtonFailure, trace: Box<NewtonTrace> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why the outer Newton loop stopped without a result.
#[derive(Debug)]
pub enum NewtonFailure {
    InitialBelowOptimum { mu0: f64 },
    MaxOuterExceeded { max_outer: usize },
    Projection { mu: f64, source: Box<Error> },
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NewtonFailure::InitialBelowOptimum { mu0 } => write!(
                f,
                "initial value mu0 = {mu0} has zero distance to the cone: initial value below mu*, supply larger mu0"
            ),
            NewtonFailure::MaxOuterExceeded { max_outer } => {
                write!(f, "Newton iteration did not converge within {max_outer} outer iterations")
            }
            NewtonFailure::Projection { mu, source } => {
                write!(f, "projection failed at mu = {mu}: {source}")
            }
        }
    }
}

impl Error {
    /// True for failures where the iteration ran out of budget rather than hitting bad data.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::ProjectionNotConverged { .. } | Error::Eigensolver(_) => true,
            Error::NewtonFailed { reason, .. } => match reason {
                NewtonFailure::MaxOuterExceeded { .. } => true,
                NewtonFailure::Projection { source, .. } => source.is_non_convergence(),
                NewtonFailure::InitialBelowOptimum { .. } => false,
            },
            _ => false,
        }
    }
}
