use thiserror::Error;

/// Errors raised by model construction, quadrature and the functionals built on them.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid sampling: {0}")]
    InvalidSampling(String),

    #[error("rejection sampler too inefficient: acceptance rate {rate:.3e} < 1e-4 ({detail})")]
    Inefficient { rate: f64, detail: String },

    /// Numerical non-convergence. `partial` carries the best estimate reached.
    #[error("precision loss: {message} (achieved error {achieved:.3e})")]
    Precision {
        message: String,
        achieved: f64,
        partial: Option<f64>,
    },

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
