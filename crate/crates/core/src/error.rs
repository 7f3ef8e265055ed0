use thiserror::Error;

/// Errors raised by the evaluation, layout and optimization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("index {index} out of range for ground set of size {n}{}", set_suffix(*.set))]
    IndexOutOfRange {
        index: usize,
        n: usize,
        set: Option<usize>,
    },

    #[error("kernel configuration error: {0}")]
    Configuration(String),

    #[error("corrupt interleaved matrix: {0}")]
    Corruption(String),

    #[error("problem too large: {0}")]
    TooLarge(String),
}

fn set_suffix(set: Option<usize>) -> String {
    match set {
        Some(j) => format!(" (evaluation set {j})"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
