use alloc::boxed::Box;
use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("adaptive quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    NonConvergent { estimate: f64, error: f64 },
    #[error("principal value requested at rigid support endpoint {omega}")]
    EndpointSingularity { omega: f64 },
    #[error("moment {order} diverges")]
    Divergent { order: u32 },
    #[error("moment {order} converges only as a principal value")]
    NeedsPrincipalValue { order: u32 },
    #[error("unknown density family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("density is identically zero")]
    DegenerateDensity,
    #[error("Lanczos breakdown after {completed} sites")]
    Breakdown { completed: usize },
    #[error("Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("unknown tensor factor `{0}`")]
    UnknownLabel(String),
    #[error("steady state is not unique (kernel dimension {kernel_dim})")]
    NonUniqueSteadyState { kernel_dim: usize },
    #[error("generator has eigenvalue with positive real part {rate:e}")]
    NotRelaxing { rate: f64 },
    #[error("steady state has negative eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { min_eigenvalue: f64 },
    #[error("oscillator truncation not converged at n_max = {n_max}")]
    TruncationNotConverged { n_max: usize },
    #[error("mapping step {step} failed: {source}")]
    Step { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Validation errors are caller mistakes; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::UnknownFamily(_)
            | Error::InvalidParameter(_)
            | Error::DegenerateDensity
            | Error::DimensionCap { .. }
            | Error::UnknownLabel(_) => true,
            Error::Step { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
