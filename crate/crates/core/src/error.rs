use thiserror::Error;

/// Failure modes shared across the library.
#[derive(Debug, Error)]
pub enum VortexError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside validity range: {0}")]
    OutOfValidityRange(String),
    #[error("quadrature did not reach tolerance: estimate {estimate:e} > {tol:e}")]
    QuadratureFailure { estimate: f64, tol: f64 },
    #[error("grid too coarse: h*k = {product:.4} exceeds {limit} ({what})")]
    ResolutionGuard {
        what: String,
        product: f64,
        limit: f64,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("converged profile changes sign: min/max = {ratio:e}")]
    NotPositive { ratio: f64 },
    #[error("profile is not converged")]
    NotConverged,
    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, VortexError>;

impl VortexError {
    /// Process exit code used by the command-line front end.
    ///
    /// 2 is a usage or parameter problem, 3 a numerical failure and 4 a
    /// request outside the regime where the method is valid.
    pub fn exit_code(&self) -> i32 {
        match self {
            VortexError::InvalidParameter(_)
            | VortexError::InsufficientData(_)
            | VortexError::ResolutionGuard { .. }
            | VortexError::GridMismatch(_)
            | VortexError::Io(_)
            | VortexError::Format(_) => 2,
            VortexError::QuadratureFailure { .. }
            | VortexError::NewtonDiverged(_)
            | VortexError::NotPositive { .. }
            | VortexError::NotConverged
            | VortexError::EigensolveFailure(_)
            | VortexError::LinearSolveFailure(_) => 3,
            VortexError::OutOfValidityRange(_) => 4,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> VortexError {
    VortexError::InvalidParameter(msg.into())
}
