use super::{Estimate, Estimator, EstimatorKind, PointEstimates};
use crate::error::{Error, Result};
use crate::model::RegressionSample;
use crate::suffstats::{compute_stats, SufficientStats};

/// `|m̂₂|` below this is treated as a degenerate spectrum.
pub const MIN_ABS_M2: f64 = 1e-12;

/// Unknown-covariance estimators
/// `σ̃² = {1 + d·m̂₁²/((n+1)m̂₂)}·T₁ − {n·m̂₁/((n+1)m̂₂)}·T₂`, `τ̃² = T₁ − σ̃²`.
pub fn estimate_spectral(stats: &SufficientStats) -> Result<PointEstimates> {
    if !(stats.m2_hat.abs() >= MIN_ABS_M2) {
        return Err(Error::DegenerateSpectrum(format!("|m2_hat| = {:e} is below {MIN_ABS_M2:e}", stats.m2_hat.abs())));
    }
    let n = stats.n as f64;
    let d = stats.d as f64;
    let (m1, m2) = (stats.m1_hat, stats.m2_hat);
    let a1 = 1.0 + d * m1 * m1 / ((n + 1.0) * m2);
    let a2 = n * m1 / ((n + 1.0) * m2);
    let sigma2 = a1 * stats.t1 - a2 * stats.t2;
    let tau2 = stats.t1 - sigma2;
    Ok(PointEstimates::new(sigma2, tau2, stats.t1, EstimatorKind::SpectralMoM))
}

/// Advisory messages when `(n, d)` is outside the regime where `m̂₂⁻¹` is
/// well behaved (`|n − d| > 9`, `d/n` away from 1).
pub fn spectral_regime_warnings(n: usize, d: usize) -> Vec<String> {
    let mut out = Vec::new();
    if n.abs_diff(d) <= 9 {
        out.push(format!("spectral estimator: |n - d| = {} <= 9; m2_hat may be near zero", n.abs_diff(d)));
    }
    let ratio = d as f64 / n as f64;
    if (0.9..=1.1).contains(&ratio) {
        out.push(format!("spectral estimator: d/n = {ratio:.3} lies in [0.9, 1.1]; estimates may be unstable"));
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct SpectralMoM;

impl Estimator for SpectralMoM {
    fn name(&self) -> &str {
        "spectral"
    }

    fn kind(&self) -> EstimatorKind {
        EstimatorKind::SpectralMoM
    }

    fn estimate(&self, sample: &RegressionSample) -> Result<Estimate> {
        let stats = compute_stats(sample);
        let point = estimate_spectral(&stats)?;
        Ok(Estimate {
            point,
            stats: stats.quadratic(),
            m1_hat: Some(stats.m1_hat),
            m2_hat: Some(stats.m2_hat),
            alpha_hat: None,
            warnings: spectral_regime_warnings(stats.n, stats.d),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::estimate_identity;
    use proptest::prelude::*;

    fn stats(t1: f64, t2: f64, m1: f64, m2: f64, n: usize, d: usize) -> SufficientStats {
        SufficientStats { t1, t2, m1_hat: m1, m2_hat: m2, n, d }
    }

    #[test]
    fn unit_moments_reduce_to_identity() {
        let s = stats(2.5, 0.7, 1.0, 1.0, 40, 90);
        let sp = estimate_spectral(&s).unwrap();
        let id = estimate_identity(&s.quadratic());
        assert!((sp.sigma2_hat - id.sigma2_hat).abs() < 1e-12);
        assert!((sp.tau2_hat - id.tau2_hat).abs() < 1e-12);
    }

    #[test]
    fn degenerate_spectrum() {
        assert!(matches!(estimate_spectral(&stats(1.0, 1.0, 1.0, 1e-13, 10, 10)), Err(Error::DegenerateSpectrum(_))));
        assert!(matches!(
            estimate_spectral(&stats(1.0, 1.0, 1.0, f64::NAN, 10, 10)),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn regime_warnings() {
        assert!(spectral_regime_warnings(100, 200).is_empty());
        assert_eq!(spectral_regime_warnings(100, 105).len(), 2);
        assert_eq!(spectral_regime_warnings(200, 190).len(), 1);
        assert_eq!(spectral_regime_warnings(5, 10).len(), 1);
    }

    proptest! {
        #[test]
        fn additivity(t1 in 0.0f64..100.0, t2 in 0.0f64..100.0, m1 in 0.1f64..5.0, m2 in 0.1f64..20.0, n in 1usize..2000, d in 1usize..2000) {
            let p = estimate_spectral(&stats(t1, t2, m1, m2, n, d)).unwrap();
            let scale = t1.max(p.sigma2_hat.abs()).max(p.tau2_hat.abs()).max(1e-300);
            prop_assert!((p.sigma2_hat + p.tau2_hat - t1).abs() <= 1e-12 * scale);
        }
    }
}
