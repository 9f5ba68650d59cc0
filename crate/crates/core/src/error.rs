//! Crate-wide error type.

use std::io;
use thiserror::Error;

/// Errors produced by image operations, the solver, the dense oracle and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("channel index {ch} out of range for {channels}-channel image")]
    ChannelOutOfRange { ch: usize, channels: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image dimensions must be at least 1x1 with at least one channel")]
    EmptyImage,

    #[error("buffer length {got} does not match width*height*channels = {expected}")]
    BadBufferLength { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("upsample factor must be at least 1")]
    ZeroFactor,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gradient step is unstable: step * (lambda + 1) = {0} must be < 2")]
    UnstableStep(f32),

    #[error("dense oracle supports at most {max} pixels, got {got}")]
    OracleTooLarge { max: usize, got: usize },

    #[error("pairwise system is singular (all confidences zero); request the target-mean gauge")]
    SingularSystem,

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },

    #[error("PFM scale must be non-zero")]
    ZeroScale,

    #[error("unsupported bit depth or max value: {0}")]
    UnsupportedBitDepth(u32),

    #[error("PNG decode error: {0}")]
    PngDecode(String),

    #[error("PNG encode error: {0}")]
    PngEncode(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
