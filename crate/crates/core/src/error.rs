use alloc::string::String;
use core::fmt;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A sparse index is not below the vector or matrix dimension.
    IndexOutOfRange { index: usize, dim: usize },
    /// A computation produced NaN or infinity.
    NonFinite(&'static str),
    /// A parameter is outside its admissible range.
    InvalidParameter(String),
    /// Input matrix is not symmetric within tolerance.
    NotSymmetric { row: usize, col: usize },
    /// A desk-scale size cap was exceeded.
    CapExceeded { what: &'static str, value: usize, cap: usize },
    /// The covering constraint cannot be satisfied (the matrix is numerically zero).
    Infeasible,
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::IndexOutOfRange { index, dim } => {
                write!(f, "index {index} out of range for dimension {dim}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NotSymmetric { row, col } => {
                write!(f, "matrix is not symmetric at ({row}, {col})")
            }
            Error::CapExceeded { what, value, cap } => {
                write!(f, "{what} = {value} exceeds the cap of {cap}; use a smaller instance")
            }
            Error::Infeasible => write!(f, "covering SDP is infeasible: maximum eigenvalue is zero"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
