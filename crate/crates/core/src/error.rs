use std::path::PathBuf;

use thiserror::Error;

use crate::codec::CodecError;
use crate::imaging::ImagingError;
use crate::metrics::MetricsError;
use crate::nifti::NiftiError;
use crate::roi::RoiError;
use crate::segment::SegmentError;
use crate::stream::StreamError;

/// Process exit codes used by the command-line tool.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const FORMAT: i32 = 2;
    pub const ENCODER_ENVIRONMENT: i32 = 3;
    pub const INTEGRITY: i32 = 4;
    pub const GEOMETRY_OR_CONFIG: i32 = 5;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Nifti(#[from] NiftiError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Roi(#[from] RoiError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use exit::*;
        match self {
            Error::Nifti(NiftiError::InconsistentDims(_)) => GEOMETRY_OR_CONFIG,
            Error::Nifti(_) | Error::Imaging(_) => FORMAT,
            Error::Stream(e) => stream_code(e),
            Error::Codec(e) => match e {
                CodecError::Config(_) | CodecError::GeometryMismatch(_) => GEOMETRY_OR_CONFIG,
                CodecError::EncoderNotFound { .. }
                | CodecError::EncoderFailed { .. }
                | CodecError::DecoderFailed { .. }
                | CodecError::EncoderTimeout { .. } => ENCODER_ENVIRONMENT,
                CodecError::ChecksumError { .. } | CodecError::BadMagic | CodecError::Corrupt(_) => INTEGRITY,
                CodecError::Stream(s) => stream_code(s),
                CodecError::Io(_) => FAILURE,
            },
            Error::Segment(_) | Error::Roi(_) | Error::Metrics(_) | Error::Config(_) | Error::Geometry(_) => {
                GEOMETRY_OR_CONFIG
            }
            Error::VerifyFailed(_) => INTEGRITY,
            Error::Io { .. } => FAILURE,
        }
    }
}

fn stream_code(e: &StreamError) -> i32 {
    match e {
        StreamError::GeometryInconsistent(_) | StreamError::MixedDimensions { .. } | StreamError::EmptyInput => {
            exit::GEOMETRY_OR_CONFIG
        }
        _ => exit::FORMAT,
    }
}
