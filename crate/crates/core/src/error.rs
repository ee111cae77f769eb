use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad magic number: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated input: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("digit {digit} has {available} instances, {requested} requested")]
    InsufficientClassCount {
        digit: u8,
        requested: usize,
        available: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{total} samples cannot cover {points} kernel rows")]
    InsufficientSamples { total: usize, points: usize },

    #[error("kernel is in stage {found}, operation requires {expected}")]
    WrongStage {
        expected: &'static str,
        found: &'static str,
    },

    #[error("matrix is not symmetric (max deviation {0:e})")]
    NotSymmetric(f64),

    #[error("k = {k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("eigenvalue {value:e} of component {index} is below the floor {floor:e}")]
    DegenerateEigenvalue { index: usize, value: f64, floor: f64 },

    #[error("eigenvalue {value:e} of component {index} is not positive")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    Empty,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line tool: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::KOutOfRange { .. } => 2,
            Error::BadMagic { .. }
            | Error::Truncated { .. }
            | Error::InsufficientClassCount { .. }
            | Error::DimensionMismatch { .. }
            | Error::LengthMismatch { .. }
            | Error::Empty
            | Error::EmptyTrainingSet
            | Error::InsufficientSamples { .. }
            | Error::WrongStage { .. }
            | Error::Io { .. } => 3,
            Error::NotSymmetric(_) | Error::DegenerateEigenvalue { .. } | Error::NonPositiveEigenvalue { .. } => 4,
        }
    }
}
