use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// A mask whose Hamming weight differs from `k` has probability zero.
    #[error("mask has weight {weight}, expected {k}")]
    WeightMismatch { weight: usize, k: usize },

    #[error("length mismatch for {field}: expected {expected}, got {got}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },

    /// Brute-force enumeration refused because C(n, k) exceeds the guard.
    #[error("enumeration of C({n}, {k}) subsets exceeds the limit of {limit}")]
    EnumerationGuard { n: usize, k: usize, limit: u64 },

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
