use thiserror::Error;

/// Errors raised by the flow integrators, diagnostics and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoflowError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    StepSize { dt: f64, limit: f64 },

    /// Curvature has grown so large relative to the node spacing that the
    /// polygon can no longer resolve the curve. Flow runs treat this as
    /// extinction.
    #[error("extinction imminent at t={time}: sup|kappa|={sup_kappa:e}, min edge={min_edge:e}")]
    ExtinctionImminent {
        time: f64,
        sup_kappa: f64,
        min_edge: f64,
    },

    #[error("blow-up: {0}")]
    BlowUp(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("positivity required: {0}")]
    Positivity(String),

    #[error("node matching failed: {0}")]
    Matching(String),

    #[error("estimator is biased: E[est] - theta = {bias:?}")]
    Bias { bias: Vec<f64> },

    #[error("estimator is not locally unbiased: dE[est]/dtheta - I has max entry {deviation:e}")]
    NotLocallyUnbiased { deviation: f64 },

    #[error("singular Fisher matrix (min eigenvalue {min_eigenvalue:e})")]
    SingularFisher { min_eigenvalue: f64 },

    #[error("optimization did not converge: {message}; best iterate {best:?}")]
    Optimization { message: String, best: Vec<f64> },

    #[error("quadrature did not converge: error estimate {error_estimate:e} after {intervals} intervals")]
    Quadrature { error_estimate: f64, intervals: usize },

    #[error("Newton iteration did not converge; residual history {history:?}")]
    NonConvergence { history: Vec<f64> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeoflowError {
    fn from(e: std::io::Error) -> Self {
        GeoflowError::Io(e.to_string())
    }
}

pub type Result<T, E = GeoflowError> = std::result::Result<T, E>;
