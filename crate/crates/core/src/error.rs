use thiserror::Error;

use crate::exprlang::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("evaluation of entry ({k},{l}) failed: {source}")]
    Entry {
        k: usize,
        l: usize,
        #[source]
        source: EvalError,
    },

    #[error("entry ({k},{l}) is not a finite complex number")]
    NonFinite { k: usize, l: usize },

    #[error("sequence value at index {k} is not a finite real number: {value}")]
    NonRealSequence { k: usize, value: String },

    #[error("sequence evaluation at index {k} failed: {source}")]
    Sequence {
        k: usize,
        #[source]
        source: EvalError,
    },

    #[error("no exactness certificate: neither factor has a finite bandwidth")]
    NoExactness,

    #[error("window padding {pad} is smaller than the band width {required}")]
    PadTooSmall { pad: usize, required: usize },

    #[error("invalid window [{lo},{hi}]: indices start at 1 and lo <= hi is required")]
    InvalidWindow { lo: usize, hi: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("singular resolvent: |c_{k} - z| = {distance:e} is below {eps:e}")]
    SingularResolvent { k: usize, distance: f64, eps: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
