use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("incompatible variable groups: {0}")]
    IncompatibleVars(String),

    #[error("truncation cap exhausted: {0}")]
    CapExhausted(String),

    #[error("invalid localizer: {0}")]
    InvalidLocalizer(String),

    #[error("invalid sieve: {0}")]
    InvalidSieve(String),

    #[error("unsupported expansion: {0}")]
    UnsupportedExpansion(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("ill-founded rewriting: {0}")]
    IllFounded(String),

    #[error("no comparable window: {0}")]
    EmptyWindow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
