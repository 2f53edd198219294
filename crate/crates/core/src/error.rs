use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("descriptor length mismatch: {left} bits vs {right} bits")]
    DescriptorLength { left: usize, right: usize },

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("empty descriptor set")]
    EmptySet,

    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("degenerate point configuration")]
    DegenerateGeometry,

    #[error("point maps to infinity")]
    PointAtInfinity,

    #[error("homography is singular")]
    SingularHomography,

    #[error("RANSAC found no hypothesis with at least 4 inliers")]
    EstimationFailed,

    #[error("overlap of {overlap} pixels is below the required {required}")]
    DegenerateOverlap { overlap: usize, required: usize },

    #[error("image geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("error mean square is zero")]
    DegenerateVariance,

    #[error("format error: {0}")]
    Format(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
