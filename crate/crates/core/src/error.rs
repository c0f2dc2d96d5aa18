use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid tick series {symbol}: {reason}")]
    InvalidSeries { symbol: String, reason: String },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("undefined opening price for {symbol} at t={t_start}")]
    UndefinedOpeningPrice { symbol: String, t_start: i64 },

    #[error("undefined previous tick for {symbol} at t={t}")]
    UndefinedPreviousTick { symbol: String, t: i64 },

    #[error("GARCH parameters are not covariance stationary: alpha1 + beta1 = {0}")]
    Nonstationary(f64),

    #[error("degenerate series: {0}")]
    Degenerate(&'static str),

    #[error("too few samples: need at least 2, got {0}")]
    TooFewSamples(usize),

    #[error("no overlapping samples")]
    NoOverlappingSamples,

    #[error("filter exhausted samples: {0} survived")]
    FilterExhausted(usize),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
