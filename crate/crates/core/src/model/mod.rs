//! Observed data, model parameters, and the simulation designs.

mod covariance;
mod generate;

pub(crate) use covariance::max_asymmetry;
pub use covariance::{
    covariance_root, estimate_ar1_alpha, materialize_covariance, precision_matrix, whitening_root, CovarianceSpec,
    Whitener, NEAR_SINGULAR_RATIO, SYMMETRY_TOL,
};
pub use generate::{
    generate_beta, generate_design, simulate_sample, simulate_with, BetaPattern, DesignDistribution, DesignSampler,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Response `y` (length n) and design `X` (n × d, row i is `x_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    y: DVector<f64>,
    x: DMatrix<f64>,
}

impl RegressionSample {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::Dimension(format!("design must be non-empty, got {n}x{d}")));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!("response has length {}, design has {n} rows", y.len())));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("sample contains non-finite values".into()));
        }
        Ok(Self { y, x })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }
}

/// Coefficients, residual variance, and predictor covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub covariance: CovarianceSpec,
}

impl ModelParams {
    pub fn new(beta: DVector<f64>, sigma2: f64, covariance: CovarianceSpec) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!("sigma2 must be finite and >= 0, got {sigma2}")));
        }
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("beta has non-finite entries".into()));
        }
        covariance.validate(beta.len())?;
        Ok(Self { beta, sigma2, covariance })
    }

    /// Signal strength `τ² = βᵀΣβ`.
    pub fn tau2(&self) -> f64 {
        self.beta.dot(&self.covariance.apply(&self.beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_invariants() {
        let x = DMatrix::zeros(3, 2);
        assert!(RegressionSample::new(DVector::zeros(3), x.clone()).is_ok());
        assert!(matches!(RegressionSample::new(DVector::zeros(2), x.clone()), Err(Error::Dimension(_))));
        let mut y = DVector::zeros(3);
        y[1] = f64::NAN;
        assert!(matches!(RegressionSample::new(y, x), Err(Error::Data(_))));
        assert!(RegressionSample::new(DVector::zeros(0), DMatrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn tau2_uses_covariance() {
        let p = ModelParams::new(DVector::from_vec(vec![1.0, 1.0]), 1.0, CovarianceSpec::Ar1 { alpha: 0.5 }).unwrap();
        assert!((p.tau2() - 3.0).abs() < 1e-15);
        assert!(ModelParams::new(DVector::zeros(2), -1.0, CovarianceSpec::Identity).is_err());
    }
}
