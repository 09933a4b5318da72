use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("{op} is at a kink (x = {x}); request a one-sided value")]
    SideRequired { op: &'static str, x: f64 },
    #[error("degenerate parameters for {op}: {detail}")]
    Degenerate { op: &'static str, detail: String },
    #[error("no convergence in {op}: {detail}")]
    Nonconvergence { op: &'static str, detail: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }

    pub(crate) fn degenerate(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Degenerate { op, detail: detail.into() }
    }

    pub(crate) fn nonconvergence(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Nonconvergence { op, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
