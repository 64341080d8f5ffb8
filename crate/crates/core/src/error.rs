use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed interchange file. `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value violates a type invariant (range, finiteness, uniqueness).
    #[error("invalid value: {0}")]
    Domain(String),

    #[error("budget {budget} exceeds ground set size {n}")]
    BudgetTooLarge { budget: usize, n: usize },

    #[error("id {id} out of range for ground set of size {n}")]
    IdOutOfRange { id: usize, n: usize },

    #[error("id {0} is already in the selected set")]
    AlreadySelected(usize),

    #[error("{variant} requires {field}")]
    MissingField {
        variant: &'static str,
        field: &'static str,
    },

    #[error(
        "kernel is not positive definite (pivot {pivot:e} at subset size {size}); \
         increase --ridge"
    )]
    NotPositiveDefinite { size: usize, pivot: f64 },

    #[error("brute force refused: C({n},{k}) = {count} subsets exceeds the limit of {limit}")]
    GuardExceeded {
        n: usize,
        k: usize,
        count: u128,
        limit: u128,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical routines rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. })
    }
}
