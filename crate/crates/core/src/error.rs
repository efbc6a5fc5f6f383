use thiserror::Error;

/// Errors raised by the numerical kernel and the checkers built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("series diverges: spectral radius {spectral_radius} is not below 1")]
    DivergentSeries { spectral_radius: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("not a frame: lower bound {lower_bound:e} does not exceed tolerance {tol:e}")]
    NotAFrame { lower_bound: f64, tol: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid hypothesis: {0}")]
    InvalidHypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
