use super::{Estimate, Estimator, EstimatorKind, PointEstimates};
use crate::error::Result;
use crate::model::RegressionSample;
use crate::suffstats::{quadratic_stats, QuadraticStats};

/// Unbiased Σ = I estimators
/// `σ̂² = (d+n+1)/(n+1)·T₁ − n/(n+1)·T₂` and `τ̂² = −d/(n+1)·T₁ + n/(n+1)·T₂`.
pub fn estimate_identity(stats: &QuadraticStats) -> PointEstimates {
    let n = stats.n as f64;
    let d = stats.d as f64;
    let sigma2 = (d + n + 1.0) / (n + 1.0) * stats.t1 - n / (n + 1.0) * stats.t2;
    let tau2 = -d / (n + 1.0) * stats.t1 + n / (n + 1.0) * stats.t2;
    PointEstimates::new(sigma2, tau2, stats.t1, EstimatorKind::IdentityMoM)
}

#[derive(Debug, Clone, Default)]
pub struct IdentityMoM;

impl Estimator for IdentityMoM {
    fn name(&self) -> &str {
        "identity"
    }

    fn kind(&self) -> EstimatorKind {
        EstimatorKind::IdentityMoM
    }

    fn estimate(&self, sample: &RegressionSample) -> Result<Estimate> {
        let stats = quadratic_stats(sample);
        Ok(Estimate::plain(estimate_identity(&stats), stats))
    }
}
