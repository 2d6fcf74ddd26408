use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A chain or observable specification violates its domain constraints.
    #[error("domain error: {0}")]
    Domain(String),

    /// Partial sums of the reversible weights keep growing under doubling of
    /// the truncation, so the measure cannot be normalized.
    #[error(
        "reversible measure diverges: partial mass {partial_small:.6e} at M={m_small}, \
         {partial_large:.6e} at M={m_large}"
    )]
    DivergentMeasure {
        m_small: usize,
        m_large: usize,
        partial_small: f64,
        partial_large: f64,
    },

    #[error("observable is not square integrable: {0}")]
    NotInL2(String),

    #[error("bisection failed to bracket the eigenvalue: {0}")]
    ToleranceNotReached(String),

    #[error("singular tridiagonal system: {0}")]
    SingularSystem(String),

    #[error("spec parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
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

pub type Result<T> = std::result::Result<T, Error>;
