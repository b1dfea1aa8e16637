use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: u32,
        left_height: u32,
        right_width: u32,
        right_height: u32,
    },

    #[error("no points")]
    NoPoints,

    #[error("empty mask")]
    EmptyMask,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("size {0} mm is out of sieve range [4.0, 63.0]")]
    OutOfSieveRange(f64),

    #[error("invalid size class {0}, expected 1..=8")]
    InvalidClass(u8),

    #[error("degenerate particle")]
    DegenerateParticle,

    #[error("invalid asset id `{0}`")]
    InvalidAssetId(String),

    #[error("duplicate asset id `{0}`")]
    DuplicateAsset(String),

    #[error("unknown asset `{0}`")]
    MissingAsset(String),

    #[error("empty asset pool for class {0}")]
    EmptyPool(u8),

    #[error("catalog scale mismatch: index records {found} mm/px, expected {expected}")]
    ScaleMismatch { expected: f64, found: f64 },

    #[error("{}: {message}", path.display())]
    Catalog { path: PathBuf, message: String },

    #[error("{count} instances exceed the 16-bit graymap id range")]
    TooManyInstances { count: usize },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported PGM maxval {0}, expected 65535")]
    UnsupportedMaxval(u32),

    #[error("invalid run-length encoding: {0}")]
    InvalidRle(String),

    #[error("invariant violated at `{field}`: {reason}")]
    Invariant { field: String, reason: String },

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("inconsistent scene: {0}")]
    InconsistentScene(String),

    #[error("no ground truth")]
    NoGroundTruth,

    #[error("missing predictions for images: {}", .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invariant(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invariant {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_file(path: impl Into<PathBuf>, source: Error) -> Self {
        match source {
            e @ (Error::Io { .. } | Error::Image { .. } | Error::InFile { .. }) => e,
            e => Error::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    /// True when the error stems from bad user input (files, configs,
    /// parameters) rather than a failure inside the tool.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InFile { source, .. } => source.is_input_error(),
            e => !matches!(e, Error::InconsistentScene(_)),
        }
    }
}
