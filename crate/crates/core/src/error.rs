use std::path::PathBuf;

use crate::cfa::Channel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("channel {0} required by the CFA is missing from the planar image")]
    MissingChannel(Channel),

    #[error("descriptor mismatch: expected {expected}, found `{found}`")]
    DescriptorMismatch { expected: String, found: String },

    #[error("invalid CFA descriptor `{name}`: {reason}")]
    InvalidDescriptor { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("image too small: {0}")]
    ImageTooSmall(String),

    #[error("odd image dimensions {width}x{height}; diagonal binning needs even sizes")]
    OddDimensions { width: usize, height: usize },

    #[error("crop {req_w}x{req_h} larger than image {width}x{height}")]
    CropTooLarge {
        req_w: usize,
        req_h: usize,
        width: usize,
        height: usize,
    },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("bad magic: expected RGBWRMS1, found {0:?}")]
    BadMagic(Vec<u8>),

    #[error("truncated stream: {0}")]
    Truncated(String),

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("level range error: {0}")]
    LevelRange(String),

    #[error("dimension overflow: {width}x{height}")]
    DimensionOverflow { width: usize, height: usize },

    #[error("unknown CFA name `{0}`")]
    UnknownCfa(String),

    #[error("unknown synthetic scene kind `{0}`")]
    UnknownSceneKind(String),

    #[error("no noise profile registered for {0} dB")]
    UnregisteredGain(f64),

    #[error("insufficient training data for phase {phase}: {rows} rows for {unknowns} unknowns")]
    InsufficientData {
        phase: usize,
        rows: usize,
        unknowns: usize,
    },

    #[error("rank-deficient design for phase {phase}: normal equations are singular and lambda is zero")]
    RankDeficient { phase: usize },

    #[error("solver did not converge for phase {phase}: relative residual {residual:e}")]
    NonConvergence { phase: usize, residual: f64 },

    #[error("invalid filter bank: {0}")]
    InvalidFilterBank(String),

    #[error("LPIPS provider failed: {message}; stderr: {stderr:?}")]
    Provider { message: String, stderr: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("malformed dataset filenames: {0:?}")]
    MalformedFilenames(Vec<PathBuf>),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("png encoding failed: {0}")]
    Png(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    FileIo {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::FileIo {
            path: path.into(),
            source,
        }
    }
}
