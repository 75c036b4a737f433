use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::CovarianceSpec;
use crate::stats::{ks_statistic, normal_cdf};
use crate::wishart::{population_moments, MomentSet};

/// `δ_k = √n · |βᵀΣᵏβ − ‖β‖² tr(Σᵏ)/d|` for `k = 1, 2`. Both vanish when
/// `β` looks like a "typical" direction for `Σ`.
pub fn condition_b_diagnostics(beta: &DVector<f64>, spec: &CovarianceSpec, n: usize) -> Result<[f64; 2]> {
    let ms = population_moments(beta, spec, 2)?;
    let root_n = (n as f64).sqrt();
    let delta = |k: usize| root_n * (ms.tau_sq[k] - ms.tau_sq[0] * ms.m[k]).abs();
    Ok([delta(1), delta(2)])
}

/// Large-sample bias of the spectral estimator of `σ²`:
/// `E σ̃² − σ² ≈ τ₁² − (m₁/m₂) τ₂²`.
pub fn spectral_bias_prediction(ms: &MomentSet) -> Result<f64> {
    if ms.order < 2 {
        return Err(Error::Domain("the bias prediction needs moments up to order 2".into()));
    }
    let [_, m1, m2, _] = ms.m;
    if !(m2 > 0.0) {
        return Err(Error::Domain(format!("m2 must be > 0, got {m2}")));
    }
    Ok(ms.tau_sq[1] - m1 / m2 * ms.tau_sq[2])
}

/// Kolmogorov–Smirnov distance of standardized estimates from `N(0, 1)`.
pub fn normality_check(standardized: &[f64]) -> Result<f64> {
    ks_statistic(standardized, normal_cdf)
        .ok_or_else(|| Error::Domain("normality check needs at least one finite value".into()))
}
