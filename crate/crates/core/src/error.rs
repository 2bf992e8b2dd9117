use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for dataset of {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("duplicate index {0} in minibatch")]
    DuplicateIndex(usize),

    #[error("empty minibatch")]
    EmptyBatch,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("{0} is not supported by this model")]
    Unsupported(&'static str),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("update produced a non-finite parameter")]
    NonFinite,

    #[error("chain diverged at iteration {iteration} (last finite |theta| = {last_norm})")]
    Diverged { iteration: usize, last_norm: f64 },

    #[error("degenerate trace: zero variance")]
    DegenerateTrace,

    #[error("insufficient samples: need at least {needed}, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("no proposal accepted in {0} consecutive steps")]
    ZeroAcceptance(usize),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
