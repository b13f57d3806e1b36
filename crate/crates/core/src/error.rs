use thiserror::Error;

/// Every failure the library can report.
///
/// The variants map one-to-one onto the CLI exit codes, so keep the set small.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    /// A linear form `p - alpha*q` (or a Hilbert-Schmidt value) is exactly zero.
    #[error("zero form: {0}")]
    ZeroForm(String),

    /// A rational alpha sits exactly on a Farey endpoint.
    #[error("boundary hit: {0}")]
    BoundaryHit(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The continued fraction ran out of quotients.
    #[error("expansion exhausted: {0}")]
    Exhausted(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
