use thiserror::Error;

use crate::eigensolver::SolverResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("embedding condition violated: a·‖κ‖∞ = {product} must be < 1")]
    Embedding { product: f64 },

    #[error("degenerate metric at s = {s}: Jacobian f = {f} is not positive")]
    DegenerateMetric { s: f64, f: f64 },

    #[error(
        "frame integration unstable at s = {s}: orthonormality drift {drift:e} exceeds 1e-6, \
         use a smaller step"
    )]
    FrameInstability { s: f64, drift: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error(
        "solver did not converge after {} iterations (relative gradient {:e}, quotient {})",
        .0.iterations, .0.gradient_norm, .0.eigenvalue
    )]
    Convergence(Box<SolverResult>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
