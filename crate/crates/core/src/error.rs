use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A model parameter violates a documented bound.
    #[error("invalid parameter `{param}`: {detail}")]
    Validation { param: &'static str, detail: String },

    /// A correlation matrix has an eigenvalue below the PSD tolerance.
    #[error("correlation matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    /// The requested computation is not available for this input.
    #[error("unsupported: {0}")]
    Capability(String),

    /// An iterative or adaptive routine did not reach its tolerance.
    #[error("{routine} did not converge: {detail}")]
    Convergence { routine: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { func, detail: detail.into() }
}

pub(crate) fn invalid(param: &'static str, detail: impl Into<String>) -> Error {
    Error::Validation { param, detail: detail.into() }
}
