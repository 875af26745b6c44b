use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A model violates one of the regularity assumptions (A.1 dimensions ratio,
    /// A.2 bounded positive variance profile, A.3 bounded LoS norm).
    #[error("assumption {assumption} violated: {detail}")]
    Assumption {
        assumption: &'static str,
        detail: String,
    },

    #[error(
        "fixed point did not converge after {iterations} iterations (last update {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Sup-norm update of every iteration, oldest first.
        trace: Vec<f64>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// `det(I - B)` is not positive: the spectral radius of B reached 1.
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
