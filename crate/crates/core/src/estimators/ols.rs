use nalgebra::linalg::QR;

use super::{Estimate, Estimator, EstimatorKind, PointEstimates};
use crate::error::{Error, Result};
use crate::model::RegressionSample;
use crate::suffstats::quadratic_stats;

/// Largest accepted condition number of `XᵀX`.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Least-squares baseline `σ̂₀² = ‖y − Xβ̂_ols‖²/(n − d)`, `τ̂₀² = T₁ − σ̂₀²`,
/// solved through a thin QR factorization of `X`.
pub fn estimate_ols(sample: &RegressionSample) -> Result<PointEstimates> {
    let (n, d) = (sample.n(), sample.d());
    if d >= n {
        return Err(Error::Regime("OLS estimator requires d < n".into()));
    }
    let qr = QR::new(sample.x().clone());
    let r = qr.r();
    // cond(XᵀX) = cond(R)²
    let sv = r.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 0.0) || (smax / smin).powi(2) >= MAX_GRAM_CONDITION {
        return Err(Error::SingularDesign(format!("condition number of X'X is {:e}", (smax / smin).powi(2))));
    }
    let q = qr.q();
    let fitted = &q * q.tr_mul(sample.y());
    let rss = (sample.y() - fitted).norm_squared();
    let sigma2 = rss / (n - d) as f64;
    let t1 = sample.y().norm_squared() / n as f64;
    Ok(PointEstimates::new(sigma2, t1 - sigma2, t1, EstimatorKind::OlsResidual))
}

#[derive(Debug, Clone, Default)]
pub struct OlsResidual;

impl Estimator for OlsResidual {
    fn name(&self) -> &str {
        "ols"
    }

    fn kind(&self) -> EstimatorKind {
        EstimatorKind::OlsResidual
    }

    fn estimate(&self, sample: &RegressionSample) -> Result<Estimate> {
        let point = estimate_ols(sample)?;
        Ok(Estimate::plain(point, quadratic_stats(sample)))
    }
}
