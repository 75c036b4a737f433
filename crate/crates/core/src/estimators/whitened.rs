use super::{estimate_identity, Estimate, Estimator, EstimatorKind, PointEstimates};
use crate::error::{Error, Result};
use crate::model::{estimate_ar1_alpha, CovarianceSpec, RegressionSample, Whitener};
use crate::suffstats::whitened_quadratic_stats;

/// Identity-case estimators applied to the whitened design `XΣ̂^{-1/2}`.
#[derive(Debug, Clone)]
pub struct WhitenedMoM {
    name: &'static str,
    source: Source,
}

#[derive(Debug, Clone)]
enum Source {
    Fixed {
        d: usize,
        whitener: Whitener,
    },
    /// `Σ̂ = (α̂^|i-j|)` with `α̂` fit from each design.
    Ar1Estimated,
}

impl WhitenedMoM {
    /// Whitens with a fixed covariance at dimension `d`.
    pub fn with_covariance(name: &'static str, spec: &CovarianceSpec, d: usize) -> Result<Self> {
        Ok(Self { name, source: Source::Fixed { d, whitener: Whitener::new(spec, d)? } })
    }

    pub fn ar1_estimated() -> Self {
        Self { name: "ar1", source: Source::Ar1Estimated }
    }
}

impl Estimator for WhitenedMoM {
    fn name(&self) -> &str {
        self.name
    }

    fn kind(&self) -> EstimatorKind {
        EstimatorKind::WhitenedMoM
    }

    fn estimate(&self, sample: &RegressionSample) -> Result<Estimate> {
        let (whitener, alpha_hat) = match &self.source {
            Source::Fixed { d, whitener } => {
                if *d != sample.d() {
                    return Err(Error::Dimension(format!(
                        "covariance is {d}x{d} but the design has {} columns",
                        sample.d()
                    )));
                }
                (whitener.clone(), None)
            }
            Source::Ar1Estimated => {
                let alpha = estimate_ar1_alpha(sample.x())?;
                (Whitener::new(&CovarianceSpec::Ar1 { alpha }, sample.d())?, Some(alpha))
            }
        };
        let stats = whitened_quadratic_stats(sample, &whitener);
        let mut point = estimate_identity(&stats);
        point.kind = EstimatorKind::WhitenedMoM;
        let mut out = Estimate::plain(point, stats);
        out.alpha_hat = alpha_hat;
        Ok(out)
    }
}

/// `σ̂²(Σ̂)`, `τ̂²(Σ̂)` for a given covariance spec.
pub fn estimate_whitened(sample: &RegressionSample, spec: &CovarianceSpec) -> Result<PointEstimates> {
    Ok(WhitenedMoM::with_covariance("known", spec, sample.d())?.estimate(sample)?.point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::IdentityMoM;
    use crate::model::{generate_design, whitening_root, DesignDistribution};
    use crate::suffstats::whitened_stats;
    use nalgebra::{DMatrix, DVector};

    fn sample(seed: u64, dist: &DesignDistribution) -> RegressionSample {
        let x = generate_design(dist, 30, 12, seed).unwrap();
        let y = DVector::from_fn(30, |i, _| ((i * 7 + 3) as f64).sin());
        RegressionSample::new(y, x).unwrap()
    }

    #[test]
    fn identity_spec_matches_identity_estimator() {
        let s = sample(1, &DesignDistribution::GaussianIsotropic);
        let w = estimate_whitened(&s, &CovarianceSpec::Identity).unwrap();
        let i = IdentityMoM.estimate(&s).unwrap().point;
        assert_eq!(w.sigma2_hat, i.sigma2_hat);
        assert_eq!(w.tau2_hat, i.tau2_hat);
        assert_eq!(w.kind, EstimatorKind::WhitenedMoM);
    }

    #[test]
    fn matches_dense_root_route() {
        let spec = CovarianceSpec::Known(DMatrix::from_fn(12, 12, |i, j| {
            if i == j {
                2.0
            } else {
                0.3f64.powi(i.abs_diff(j) as i32)
            }
        }));
        let s = sample(2, &DesignDistribution::Gaussian(spec.clone()));
        let fast = estimate_whitened(&s, &spec).unwrap();
        let dense = estimate_identity(&whitened_stats(&s, &whitening_root(&spec, 12).unwrap()).unwrap().quadratic());
        assert!((fast.sigma2_hat - dense.sigma2_hat).abs() < 1e-10);
        assert!((fast.tau2_hat - dense.tau2_hat).abs() < 1e-10);
    }

    #[test]
    fn ar1_estimated_reports_alpha() {
        let s = sample(3, &DesignDistribution::Gaussian(CovarianceSpec::Ar1 { alpha: 0.5 }));
        let e = WhitenedMoM::ar1_estimated().estimate(&s).unwrap();
        let a = e.alpha_hat.unwrap();
        assert_eq!(a, estimate_ar1_alpha(s.x()).unwrap());
        let direct = estimate_whitened(&s, &CovarianceSpec::Ar1 { alpha: a }).unwrap();
        assert_eq!(direct.sigma2_hat, e.point.sigma2_hat);
    }

    #[test]
    fn errors_propagate() {
        let s = sample(4, &DesignDistribution::GaussianIsotropic);
        assert!(matches!(estimate_whitened(&s, &CovarianceSpec::Ar1 { alpha: 1.5 }), Err(Error::Covariance(_))));
        let ones = RegressionSample::new(DVector::zeros(3), DMatrix::from_element(3, 4, 1.0)).unwrap();
        // α̂ = 1 is not a valid AR(1) coefficient
        assert!(matches!(WhitenedMoM::ar1_estimated().estimate(&ones), Err(Error::Covariance(_))));
        let wrong = WhitenedMoM::with_covariance("known", &CovarianceSpec::Identity, 5).unwrap();
        assert!(matches!(wrong.estimate(&s), Err(Error::Dimension(_))));
    }
}
