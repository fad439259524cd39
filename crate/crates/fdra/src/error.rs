//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Mismatched vector/tensor dimensions between scenario, channels,
    /// assignment or powers.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A structural constraint was violated (e.g. a half-duplex user paired
    /// with itself on a sub-channel).
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or missing experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A size guard was hit (e.g. exhaustive search on a too-large instance).
    #[error("size guard: {0}")]
    Guard(String),

    /// The inner convex solver did not reach its KKT tolerance within the
    /// iteration cap. Carries the best iterate found so far.
    #[error("inner solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    InnerNonConvergence {
        residual: f64,
        iterations: usize,
        best_iterate: Vec<f64>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
