use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value violated a domain invariant (non-positive factor, out-of-range height, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported gait `{0}` (supported: trot, pronk, bound, custom)")]
    UnsupportedGait(String),

    /// Frequency-response samples could not be fitted to a second-order model.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("simulation diverged at step {step} (t = {time_s:.6} s): {what}")]
    Divergence { step: usize, time_s: f64, what: String },

    #[error("series length mismatch: {0}")]
    Mismatch(String),

    #[error("cost of transport undefined: mean speed {0} mm/s is not positive")]
    UndefinedCot(f64),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
