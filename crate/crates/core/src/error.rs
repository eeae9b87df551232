use thiserror::Error;

/// Library-wide error type.
///
/// The three Monte Carlo / numerical variants map onto the CLI exit codes:
/// configuration problems exit 1, numerical failures exit 2, violated
/// assertions (e.g. an equivalence check) exit 3.
#[derive(Debug, Error)]
pub enum KolmoError {
    /// Malformed structure: dimension mismatches, bad signatures, empty boxes.
    #[error("structural error: {0}")]
    Structural(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed (factorization, exhausted paths, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A hard invariant asserted by an experiment was violated.
    #[error("assertion violated: {0}")]
    Assertion(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KolmoError {
    pub fn structural(msg: impl Into<String>) -> Self {
        KolmoError::Structural(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        KolmoError::Domain(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        KolmoError::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, KolmoError>;
