use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("covariance error: {0}")]
    Covariance(String),

    #[error("infeasible beta pattern: {0}")]
    Pattern(String),

    #[error("{0}")]
    Regime(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("signal-to-noise ratio undefined: residual variance estimate {0} is below the guard")]
    SnrUndefined(f64),

    #[error("moment of order {0} exceeds the supported maximum of 4")]
    Complexity(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Symmetry(f64),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
}

impl Error {
    /// Whether the error reflects an estimator used outside its regime
    /// (as opposed to malformed input).
    pub fn is_regime(&self) -> bool {
        matches!(self, Error::Regime(_) | Error::SingularDesign(_) | Error::DegenerateSpectrum(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
