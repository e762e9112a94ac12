use thiserror::Error;

/// Errors raised by the quaternion kernels, the solver and the patch pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("empty observation mask")]
    EmptyMask,

    #[error("zero matrix has no energy spectrum")]
    ZeroMatrix,

    #[error("patch {w}x{h} does not fit in a {rows}x{cols} image")]
    PatchTooLarge {
        w: usize,
        h: usize,
        rows: usize,
        cols: usize,
    },

    #[error("search window holds {found} candidates but the group needs {needed}")]
    TooFewCandidates { found: usize, needed: usize },

    #[error("pixel ({row}, {col}) of slice {slice} is not covered by any reconstructed patch")]
    Uncovered { slice: usize, row: usize, col: usize },

    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical kernels (divergence, eigensolver trouble).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
