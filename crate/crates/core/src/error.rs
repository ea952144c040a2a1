use thiserror::Error;

/// Errors raised by the solvers and the scenario layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation (zero probability, empty set, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter has a forbidden value (zero inverse temperature, nonpositive cost, ...).
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The computation ran but its result cannot be trusted or is inconsistent.
    #[error("numerical diagnostic: {0}")]
    Diagnostic(String),
    /// A scenario document violated its schema; `path` points at the offending field.
    #[error("invalid scenario at `{path}`: {message}")]
    Schema { path: String, message: String },
    /// The scenario document is not well-formed structured text.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn diagnostic(msg: impl Into<String>) -> Self {
        Error::Diagnostic(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors that stem from invalid input rather than from the numerics.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Diagnostic(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
