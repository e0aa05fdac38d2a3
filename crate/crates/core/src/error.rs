use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{0}: fields live on different grids")]
    GridMismatch(&'static str),

    #[error("{0} is outside the transform domain for m = {1}")]
    OutOfDomain(f64, f64),

    #[error("Picard iteration did not converge at t = {time} after {halvings} step halvings (last change {change:e})")]
    NonConvergence { time: f64, halvings: u32, change: f64 },

    #[error("maximum principle violated at t = {time}: v = {value} outside [{low}, {high}]")]
    BoundViolation { time: f64, value: f64, low: f64, high: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }
}
