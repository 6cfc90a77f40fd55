use thiserror::Error;

/// Errors shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("the root vertex has no parent")]
    RootHasNoParent,

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("conditioning event has probability zero")]
    InfeasibleConditioning,

    #[error("volume too large for exhaustive enumeration: {what} = {got}, cap = {cap}")]
    VolumeTooLarge {
        what: &'static str,
        got: usize,
        cap: usize,
    },

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("transfer-matrix product degenerated to zero")]
    DegenerateProduct,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for `Error::Domain` with formatting.
macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(format!($($arg)*))
    };
}
pub(crate) use domain;
