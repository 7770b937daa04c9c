use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid value for {what}: {detail}")]
    InvalidValue { what: &'static str, detail: String },

    #[error("insufficient samples for frame {frame}: need {needed} samples, have {available}")]
    InsufficientSamples {
        frame: usize,
        needed: usize,
        available: usize,
    },

    #[error("Levinson-Durbin degenerate at step {step}: {detail}")]
    DegenerateLpc { step: usize, detail: String },

    #[error("block-sparse layout error: {0}")]
    SparseLayout(String),

    #[error("unsupported audio format in {path}: {detail}")]
    AudioFormat { path: PathBuf, detail: String },

    #[error("feature file {path}: {detail}")]
    FeatureFile { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("weight file: {0}")]
    Weights(#[from] WeightError),
}

/// Failures while decoding a weight file. Each names the record involved.
#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("bad magic {found:?}, expected \"LPCW\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    Version { found: u32, supported: u32 },

    #[error("truncated file while reading {record}: need {expected} bytes at offset {offset}, file has {actual}")]
    Truncated {
        record: String,
        offset: usize,
        expected: usize,
        actual: usize,
    },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("tensor {record}: {detail}")]
    Malformed { record: String, detail: String },

    #[error("tensor {record}: expected shape {expected:?}, found {found:?}")]
    Shape {
        record: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("missing tensor {0}")]
    Missing(String),

    #[error("duplicate tensor {0}")]
    Duplicate(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
