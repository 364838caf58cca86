use thiserror::Error;

#[derive(Debug, Error)]
pub enum FstError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("negative radicand {value:e} for coupling J_{index} (theta outside (0, pi]?)")]
    Domain { index: usize, value: f64 },

    #[error("{what}: size {n} exceeds guard {limit}")]
    SizeGuard {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("tolerance exceeded: {what} = {value:e} > {tol:e}")]
    Tolerance { what: String, value: f64, tol: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl FstError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        FstError::Invalid(msg.into())
    }

    /// True for errors that come from a numerical check rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, FstError::Tolerance { .. } | FstError::Validation(_))
    }
}

pub type Result<T> = std::result::Result<T, FstError>;
