use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid piece label {0} (valid labels are 1, 2, 3)")]
    InvalidPiece(u8),

    #[error("box constraint at coordinate {index}: {reason}")]
    InvalidBox { index: usize, reason: String },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("smoothing parameter ratio must not exceed 1 (prev={prev}, cur={cur})")]
    MuRatioIncrease { prev: f64, cur: f64 },

    #[error("numeric failure at iteration {iter}: {reason}")]
    Divergence { iter: usize, reason: String },

    #[error("parse error at line {line}: field `{field}`: {reason}")]
    Parse {
        line: usize,
        field: String,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
