//! Error type shared across the crate.

use ndarray::Array2;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (dimensions, ranges, non-finite values).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input is numerically degenerate (e.g. zero covariance).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative estimator left its stable region. `last_w` holds the last
    /// unmixing matrix observed before the blow-up.
    #[error("estimator diverged: {message}")]
    Divergence {
        message: String,
        last_w: Box<Array2<f64>>,
    },

    /// Image carries no usable signal (e.g. constant intensity).
    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("registration failed: {0}")]
    RegistrationFailed(String),

    /// A metric's denominator is zero or its operands are out of domain.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// No estimated component correlates with the reference well enough to
    /// pick a signal component. Candidates are (component index, |correlation|),
    /// best first.
    #[error("component selection ambiguous: best |correlation| {best:.4} < 0.2; candidates {candidates:?}")]
    SelectionAmbiguous {
        best: f64,
        candidates: Vec<(usize, f64)>,
    },

    #[error("config error: {0}")]
    Config(String),

    /// Malformed file contents (PGM raster, ROI definitions, ...).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
