use alloc::boxed::Box;
use alloc::string::String;

use crate::seqcore::PathViolation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("dimensionality mismatch: x has {x} feature(s), y has {y}")]
    DimensionMismatch { x: usize, y: usize },

    #[error("invalid alignment path: {0}")]
    InvalidPath(PathViolation),

    #[error("paths refer to different grids: {left:?} vs {right:?}")]
    GridMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("degenerate bandwidth: all samples are identical")]
    DegenerateBandwidth,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix not positive definite after escalating ridge to {lambda}")]
    NotPositiveDefinite { lambda: f64 },

    #[error("rank-deficient covariance on the {side} side")]
    RankDeficient { side: &'static str },

    #[error("eigen decomposition failed")]
    EigenFailure,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }

    /// The innermost error, with iteration context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<PathViolation> for Error {
    fn from(v: PathViolation) -> Self {
        Error::InvalidPath(v)
    }
}
