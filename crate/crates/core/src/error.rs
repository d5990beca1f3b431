use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// The variants split into two families: validation errors (bad input,
/// out-of-domain exponents, parse failures) and numeric failures (divergent
/// integrals, tolerances that could not be met). The CLI maps the first
/// family to exit code 2 and the second to exit code 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("tolerance not met: estimate {estimate:e}, error {achieved:e} > requested {requested:e}")]
    Tolerance {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("refinement exhausted after {points} points: estimate {estimate:e}, last change {change:e}")]
    RefinementExhausted {
        estimate: f64,
        change: f64,
        points: usize,
    },

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("empty feasible set: {0}")]
    EmptyFeasible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics as opposed to rejected input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Divergence(_)
                | Error::Tolerance { .. }
                | Error::RefinementExhausted { .. }
                | Error::NoRoot(_)
                | Error::EmptyFeasible(_)
                | Error::Degenerate(_)
        )
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

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
