//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical kernels and model layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its panel budget. The best estimate
    /// obtained so far is carried along with its error estimate.
    #[error("quadrature did not converge: best estimate {estimate:e} (error {error_estimate:e}) after {evaluations} evaluations")]
    QuadratureBudget {
        estimate: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    /// A series did not converge within the configured term budget.
    #[error("series did not converge within {terms} terms ({context})")]
    SeriesBudget { terms: usize, context: String },

    /// Monte Carlo configuration requires integer cluster counts.
    #[error("non-integer cluster configuration: {0}; use the nearest integer-compatible (u, u*p)")]
    NonIntegerClusters(String),

    /// Input data failed validation (CSV parse or consistency checks).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// File I/O failure.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    /// Every optimizer start failed to produce a finite objective.
    #[error("all {starts} fit starts failed: {details}")]
    FitFailed { starts: usize, details: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
