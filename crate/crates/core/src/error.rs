use thiserror::Error;

/// Errors surfaced by parameter validation and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParam {
        field: &'static str,
        message: String,
    },

    #[error("presynaptic time {t_pre} out of range for train of length {len}")]
    TPreOutOfRange { t_pre: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bin edges must be strictly increasing with at least 2 entries")]
    BadBinEdges,

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("coupling gain beta must be nonzero for the equivalence check")]
    BetaZero,

    #[error("relaxation diverged: |s| = {magnitude} exceeded bound {bound}")]
    Diverged { magnitude: f64, bound: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            message: message.into(),
        }
    }
}
