use thiserror::Error;

use crate::logic::ParseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("trajectory too short: formula needs index {needed} but trajectory has {len} samples")]
    HorizonOverflow { needed: usize, len: usize },

    #[error("malformed interval at index {index}, coordinate {coord}: lower {lo} > upper {hi}")]
    MalformedInterval {
        index: usize,
        coord: usize,
        lo: f64,
        hi: f64,
    },

    #[error("model-domain error at step {step}: {detail}")]
    ModelDomain { step: usize, detail: String },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
