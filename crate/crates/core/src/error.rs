use alloc::string::String;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model object violates one of its structural invariants.
    #[error("construction error: {0}")]
    Construction(String),
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A matrix that must be Hermitian is not.
    #[error("{what} is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { what: &'static str, deviation: f64 },
    /// A linear solve hit a singular matrix.
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    /// An integrator or solver detected a numerical breakdown.
    #[error("numerical abort: {0}")]
    NumericalAbort(String),
}

pub type Result<T> = core::result::Result<T, Error>;
