use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {format} header: {reason}")]
    Header { format: &'static str, reason: String },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("image decode failed: {0}")]
    Decode(#[from] image::ImageError),
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scene: {0}")]
    Scene(String),
    #[error("{width}x{height} image is too small: {reason}")]
    TooSmall {
        width: usize,
        height: usize,
        reason: String,
    },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown strategy override {0:?} (expected dhs1, dhs1+dhs2, dhs1+dhs3 or full)")]
    UnknownStrategy(String),
    #[error("no parallax: depth does not move the pixel along an epipolar line")]
    NoParallax,
    #[error("stage {stage}: {invalid:.1}% of pixels have no valid hypothesis")]
    DegenerateStage { stage: usize, invalid: f64 },
    #[error("non-finite value in {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures raised by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoParallax | Error::DegenerateStage { .. } | Error::Numerical(_)
        )
    }
}
