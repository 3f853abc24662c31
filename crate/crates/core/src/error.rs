use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hurst parameter must lie in (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("two-sided grid needs J >= 1")]
    EmptyGrid,

    #[error("point set has {len} points, cap is {cap}; lower n or t")]
    TooManyPoints { len: usize, cap: usize },

    #[error("points must be strictly increasing (violated at index {index})")]
    UnsortedPoints { index: usize },

    #[error(
        "covariance not positive-definite after jitter at pivot {pivot}; \
         nearest pair is ({left}, {right})"
    )]
    NotPositiveDefinite { pivot: usize, left: f64, right: f64 },

    #[error(
        "order {order} with H = {hurst} violates the summability condition H < 1 - 1/(2*{order}); the series diverges"
    )]
    Divergent { order: u32, hurst: f64 },

    #[error("truncation cap {cap} reached before tail bound {bound:e} fell below {tol:e}")]
    ToleranceUnreachable { cap: u64, bound: f64, tol: f64 },

    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: u32, max: u32 },

    #[error("coefficient index k = {k} out of range {lo}..={hi}")]
    IndexOutOfRange { k: u32, lo: u32, hi: u32 },

    #[error("horizon of {requested} steps exceeds walk length {available}")]
    HorizonTooLong { requested: usize, available: usize },

    #[error("increment window covers cells {have_lo}..={have_hi} but the walk needs {need_lo}..={need_hi}")]
    Coverage {
        need_lo: i64,
        need_hi: i64,
        have_lo: i64,
        have_hi: i64,
    },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{quarantined} of {total} replicates produced non-finite statistics")]
    Quarantine { quarantined: usize, total: usize },

    #[error("malformed binary path: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
