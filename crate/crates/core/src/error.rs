use std::path::PathBuf;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tau = {tau} violates the operation region tau < 1/(1+beta_h) for beta_h = {beta_h}")]
    OperationRegionViolation { tau: f64, beta_h: f64 },

    #[error("band edge W = {w} exceeds the flat band of V(f), which ends at {flat_edge}")]
    FlatBandViolation { w: f64, flat_edge: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block of {0} symbols is too large for exhaustive enumeration")]
    BlockTooLarge(usize),

    #[error("matrix is rank deficient (|R[{index}][{index}]| = {value:e})")]
    RankDeficient { index: usize, value: f64 },

    #[error("candidate list is empty")]
    EmptyList,

    #[error("radius predictor produced an unusable radius {0}")]
    NonFiniteRadius(f64),

    #[error("training diverged: non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("model/config mismatch: {0}")]
    ModelMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error class: 2 configuration, 3 I/O,
    /// 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } => 3,
            Error::NonFiniteLoss(_)
            | Error::NonFiniteRadius(_)
            | Error::RankDeficient { .. }
            | Error::EmptyList => 4,
            _ => 2,
        }
    }
}
