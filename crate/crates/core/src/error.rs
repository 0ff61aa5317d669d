use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("chart singularity: {0}")]
    ChartSingularity(String),

    /// Circular orbit: the argument of pericentre is not defined separately.
    #[error("degenerate eccentricity (e = 0): g is undefined")]
    DegenerateEccentricity,

    #[error("empty reduced space for n={n}, xi={xi}, l={l}")]
    EmptyReducedSpace { n: f64, xi: f64, l: f64 },

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("integration failed at t={t}: {reason}")]
    IntegrationFailure { t: f64, state: Vec<f64>, reason: String },

    #[error("oracle error estimate {estimate:e} exceeds tolerance {tol:e}")]
    OracleTolerance { estimate: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
