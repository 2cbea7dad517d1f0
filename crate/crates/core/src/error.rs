use thiserror::Error;

/// Errors raised across the workbench.
///
/// Variants are grouped by the exit code the command-line front end maps
/// them to: validation problems (2), exhausted resource budgets (3) and
/// violated model properties that carry a witness (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("no perfect covering found with period bound {bound}")]
    NoCovering { bound: usize },

    #[error("sliding: unbounded covering family (a covering with period {period} along axis {axis} reached the search bound {bound})")]
    UnboundedCoverings { bound: usize, axis: usize, period: i64 },

    #[error("budget exceeded: {what} (limit {limit})")]
    Budget { what: String, limit: u64 },

    #[error("inconsistent boundary: {0}")]
    InconsistentBoundary(String),

    #[error("pole: the partition function vanishes at the evaluation point")]
    Pole,

    #[error("root finder did not converge after {iterations} iterations at {precision} bits")]
    NonConvergence {
        iterations: usize,
        precision: u32,
        partial: Vec<(f64, f64)>,
    },

    #[error("sliding violation: {message}")]
    SlidingViolation { message: String, witness: Vec<Vec<i32>> },

    #[error("ambient margin too small: support within distance 1 of the box frontier")]
    MarginTooSmall,

    #[error("incomplete enumeration: {0}")]
    IncompleteEnumeration(String),

    #[error("property violation: {0}")]
    PropertyViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::InconsistentBoundary(_)
            | Error::MarginTooSmall
            | Error::Json(_)
            | Error::Io(_) => 2,
            Error::Budget { .. } | Error::NonConvergence { .. } | Error::IncompleteEnumeration(_) => 3,
            Error::NoCovering { .. }
            | Error::UnboundedCoverings { .. }
            | Error::Pole
            | Error::SlidingViolation { .. }
            | Error::PropertyViolation(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
