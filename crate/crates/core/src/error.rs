use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum MmcError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("mask entry at ({row}, {col}) is {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },

    #[error("assignment masks collide at ({row}, {col})")]
    Collision { row: usize, col: usize },

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index {index} is not observed")]
    Unobserved { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not orthonormal: max deviation {deviation:e} from identity")]
    NotOrthonormal { deviation: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MmcError>;
