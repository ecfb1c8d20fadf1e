use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid illuminant: {0}")]
    InvalidIlluminant(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate image: {0}")]
    DegenerateImage(String),

    #[error("degenerate sequence: {0}")]
    DegenerateSequence(String),

    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("unsupported image format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("manifest error at line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image decode error on {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidIlluminant(_) => "invalid-illuminant",
            Error::EmptyInput(_) => "empty-input",
            Error::DegenerateImage(_) => "degenerate-image",
            Error::DegenerateSequence(_) => "degenerate-sequence",
            Error::ImageTooSmall { .. } => "image-too-small",
            Error::InvalidImage(_) => "invalid-image",
            Error::InvalidBelief(_) => "invalid-belief",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Shape(_) => "shape",
            Error::Numerical(_) => "numerical",
            Error::Format { .. } => "format",
            Error::Manifest { .. } => "manifest",
            Error::Checkpoint(_) => "checkpoint",
            Error::UnknownMethod(_) => "unknown-method",
            Error::Io { .. } => "io",
            Error::Decode { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
