//! Point estimators of `σ²`, `τ²` and `τ²/σ²`.
//!
//! Every estimator implements [`Estimator`] and is constructed by name through
//! the [`EstimatorRegistry`]:
//!
//! | name       | kind          | covariance handling                      |
//! |------------|---------------|------------------------------------------|
//! | `identity` | IdentityMoM   | assumes Σ = I                            |
//! | `known`    | WhitenedMoM   | whitens with a supplied Σ                |
//! | `oracle`   | WhitenedMoM   | whitens with the true generating Σ       |
//! | `ar1`      | WhitenedMoM   | fits an AR(1) Σ̂ from X, then whitens     |
//! | `spectral` | SpectralMoM   | unknown Σ, uses m̂₁ and m̂₂               |
//! | `ols`      | OlsResidual   | least-squares residuals, needs d < n     |

mod identity;
mod ols;
mod registry;
mod spectral;
mod whitened;

pub use identity::{estimate_identity, IdentityMoM};
pub use ols::{estimate_ols, OlsResidual};
pub use registry::{EstimatorContext, EstimatorFactory, EstimatorRegistry};
pub use spectral::{estimate_spectral, spectral_regime_warnings, SpectralMoM, MIN_ABS_M2};
pub use whitened::{estimate_whitened, WhitenedMoM};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::RegressionSample;
use crate::suffstats::QuadraticStats;

/// SNR is reported only when `σ̂² > SNR_GUARD_RATIO · T₁`.
pub const SNR_GUARD_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    IdentityMoM,
    WhitenedMoM,
    SpectralMoM,
    OlsResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEstimates {
    /// May be negative; never truncated.
    pub sigma2_hat: f64,
    /// May be negative; never truncated.
    pub tau2_hat: f64,
    /// `τ̂²/σ̂²`, present only when the guard passes.
    pub snr_hat: Option<f64>,
    /// `τ̂²/σ̂²` without the guard (may be infinite or NaN).
    pub snr_raw: f64,
    pub kind: EstimatorKind,
    pub negative_flag: bool,
}

impl PointEstimates {
    pub(crate) fn new(sigma2_hat: f64, tau2_hat: f64, t1: f64, kind: EstimatorKind) -> Self {
        let snr_raw = tau2_hat / sigma2_hat;
        let snr_hat = (sigma2_hat > SNR_GUARD_RATIO * t1).then_some(snr_raw);
        Self { sigma2_hat, tau2_hat, snr_hat, snr_raw, kind, negative_flag: sigma2_hat < 0.0 || tau2_hat < 0.0 }
    }
}

/// Output of an [`Estimator`]: the point estimates plus the statistics they
/// were computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub point: PointEstimates,
    /// `T₁`, `T₂` actually used (whitened `T₂` for WhitenedMoM).
    pub stats: QuadraticStats,
    pub m1_hat: Option<f64>,
    pub m2_hat: Option<f64>,
    /// Fitted AR(1) coefficient, for the `ar1` estimator.
    pub alpha_hat: Option<f64>,
    pub warnings: Vec<String>,
}

impl Estimate {
    pub(crate) fn plain(point: PointEstimates, stats: QuadraticStats) -> Self {
        Self { point, stats, m1_hat: None, m2_hat: None, alpha_hat: None, warnings: Vec::new() }
    }
}

/// A method for estimating `σ²` and `τ²` from one dataset.
pub trait Estimator: Send + Sync {
    /// Registry name.
    fn name(&self) -> &str;

    fn kind(&self) -> EstimatorKind;

    fn estimate(&self, sample: &RegressionSample) -> Result<Estimate>;
}
