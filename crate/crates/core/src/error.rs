use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e} after {subdivisions} subdivisions")]
    QuadratureNotConverged {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("target does not support {0}")]
    Unsupported(&'static str),

    #[error("state {x} is outside the support {support}")]
    OutsideSupport { x: f64, support: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid leaks {leak:e} of probability off-grid from cell {cell}; widen the grid")]
    GridLeakage { cell: usize, leak: f64 },

    #[error("grid leaves {uncovered:e} of target mass uncovered")]
    GridCoverage { uncovered: f64 },

    #[error("transition matrix is not a valid reversible kernel: {0}")]
    InvalidKernel(String),

    #[error(
        "eigen-iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("all stationary mass sits in a single cell")]
    DegenerateStationary,

    #[error("no samples retained in the set; cannot estimate conductance")]
    NoSamplesRetained,

    #[error("censored hitting time in input to ratio diagnostics")]
    CensoredInput,

    #[error("no candidate drift rate certifies the drift inequality (best margin {best_margin:e} at alpha {best_alpha})")]
    DriftNotCertified { best_alpha: f64, best_margin: f64 },

    #[error("conductance {value:e} is not a positive double; sigma is too small for f64")]
    ConductanceUnderflow { value: f64 },

    #[error("minorization constant is not positive ({epsilon:e})")]
    MinorizationFailed { epsilon: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
