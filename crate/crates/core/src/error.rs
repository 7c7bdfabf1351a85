use std::path::PathBuf;

/// Crate-wide error type. Variants are grouped by what the caller can do
/// about them: I/O failures keep the offending path, validation failures
/// carry the values that violated the contract.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {reason}")]
    BadImage { path: PathBuf, reason: String },

    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("image is {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("label {value} out of range for {classes} classes")]
    ClassOutOfRange { value: u8, classes: usize },

    #[error("unknown window class {0}")]
    UnknownWindowClass(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("non-finite value in {stage}")]
    NonFinite { stage: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            reason: reason.into(),
        }
    }
}
