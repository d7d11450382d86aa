use core::fmt;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// An e-vector component is negative, NaN, or infinite.
    InvalidEVector,
    /// Portfolio weights are negative or do not sum to one.
    InvalidPortfolio,
    /// A scalar argument is outside its admissible range.
    Domain(&'static str),
    /// Every candidate portfolio yields zero wealth.
    DegenerateInput,
    /// The requested operation only supports `d = 1`.
    UnsupportedDimension(usize),
    /// A distribution or sequence that must be nonempty is empty.
    Empty,
    /// An arm index is out of range.
    ArmOutOfRange { arm: usize, arms: usize },
    /// An operation precondition does not hold.
    Precondition(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidEVector => f.write_str("e-vector components must be finite and nonnegative"),
            Error::InvalidPortfolio => f.write_str("portfolio must be nonnegative and sum to one"),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DegenerateInput => f.write_str("objective is identically -inf on the simplex"),
            Error::UnsupportedDimension(d) => write!(f, "unsupported dimension d = {d} (only d = 1)"),
            Error::Empty => f.write_str("empty input"),
            Error::ArmOutOfRange { arm, arms } => write!(f, "arm {arm} out of range for {arms} arms"),
            Error::Precondition(what) => write!(f, "precondition violated: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
