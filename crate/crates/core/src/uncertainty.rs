//! Variances of the estimators and normal confidence intervals.
//!
//! Asymptotic scales are reported per √n: the standard error of an estimator
//! is `ψ/√n`. The exact finite-sample expressions hold for `Σ = I` with
//! Gaussian rows and noise.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, PointEstimates};
use crate::stats::normal_quantile;
use crate::suffstats::QuadraticStats;

/// Largest `d/n` for which OLS asymptotic intervals are offered.
pub const OLS_MAX_RATIO: f64 = 0.95;

/// `ψ₁², ψ₂², ψ₀²` for `σ²`, `τ²` and `τ²/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticVariances {
    pub psi1_sq: f64,
    pub psi2_sq: f64,
    /// Undefined when `σ² = 0`.
    pub psi0_sq: Option<f64>,
}

impl AsymptoticVariances {
    pub fn psi0_sq(&self) -> Result<f64> {
        self.psi0_sq.ok_or_else(|| Error::Domain("the SNR variance needs sigma2 > 0".into()))
    }
}

fn check_params(sigma2: f64, tau2: f64) -> Result<()> {
    if !(sigma2 >= 0.0 && tau2 >= 0.0) || !sigma2.is_finite() || !tau2.is_finite() {
        return Err(Error::Domain(format!(
            "variance parameters must be finite and >= 0, got sigma2 = {sigma2}, tau2 = {tau2}"
        )));
    }
    Ok(())
}

/// Σ = I asymptotic variances:
/// `ψ₁² = 2{(d/n)(σ²+τ²)² + σ⁴ + τ⁴}`,
/// `ψ₂² = 2{(1+d/n)(σ²+τ²)² − σ⁴ + 3τ⁴}`,
/// `ψ₀² = (2/σ⁸){(1+d/n)(σ²+τ²)⁴ − σ⁴(σ²+τ²)²}`.
pub fn psi_identity(sigma2: f64, tau2: f64, n: usize, d: usize) -> Result<AsymptoticVariances> {
    psi_spectral(sigma2, tau2, n, d, 1.0, 1.0, 1.0)
}

/// Unknown-covariance asymptotic variances. With `r = m₁m₃/m₂²`,
/// `a = d m₁²/(n m₂)` and `s = σ² + τ²`:
/// `ψ̃₁² = 2{(a + r − 1)s² + (2 − r)σ⁴ + rτ⁴}`,
/// `ψ̃₂² = 2{(a + r)s² − rσ⁴ + (2 + r)τ⁴}`,
/// `ψ̃₀² = (2/σ⁸){(a + r)s⁴ − rσ⁴s² − (1 − r)τ⁴s²}`.
pub fn psi_spectral(
    sigma2: f64,
    tau2: f64,
    n: usize,
    d: usize,
    m1: f64,
    m2: f64,
    m3: f64,
) -> Result<AsymptoticVariances> {
    check_params(sigma2, tau2)?;
    if !(m2 > 0.0) {
        return Err(Error::Domain(format!("m2 must be > 0, got {m2}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    let r = m1 * m3 / (m2 * m2);
    let a = d as f64 * m1 * m1 / (n as f64 * m2);
    let s = sigma2 + tau2;
    let (s2, sig4, tau4) = (s * s, sigma2 * sigma2, tau2 * tau2);
    let psi1_sq = 2.0 * ((a + r - 1.0) * s2 + (2.0 - r) * sig4 + r * tau4);
    let psi2_sq = 2.0 * ((a + r) * s2 - r * sig4 + (2.0 + r) * tau4);
    let psi0_sq =
        (sigma2 > 0.0).then(|| 2.0 / (sig4 * sig4) * ((a + r) * s2 * s2 - r * sig4 * s2 - (1.0 - r) * tau4 * s2));
    Ok(AsymptoticVariances { psi1_sq, psi2_sq, psi0_sq })
}

/// Exact finite-sample covariance of `(σ̂², τ̂²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactCovariance {
    pub var_sigma2: f64,
    pub var_tau2: f64,
    pub cov_sigma2_tau2: f64,
}

impl ExactCovariance {
    pub fn as_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.var_sigma2, self.cov_sigma2_tau2, self.cov_sigma2_tau2, self.var_tau2)
    }
}

/// Exact `Var(σ̂²)`, `Var(τ̂²)`, `Cov(σ̂², τ̂²)` of the Σ = I estimators.
pub fn exact_covariance_identity(sigma2: f64, tau2: f64, n: usize, d: usize) -> ExactCovariance {
    let n = n as f64;
    let d = d as f64;
    let (s4, st, t4) = (sigma2 * sigma2, sigma2 * tau2, tau2 * tau2);
    let (dn, dn2, n1, n2) = (d / n, d / (n * n), 1.0 / n, 1.0 / (n * n));
    let k = 2.0 * n / ((n + 1.0) * (n + 1.0));
    let var_sigma2 = k
        * ((dn + 1.0 + 2.0 * dn2 + 2.0 * n1 + n2) * s4
            + (2.0 * dn + 4.0 * dn2 + 4.0 * n1 + 8.0 * n2) * st
            + (dn + 1.0 + 2.0 * dn2 + 7.0 * n1 + 10.0 * n2) * t4);
    let var_tau2 = k
        * ((dn + 2.0 * dn2) * s4
            + (2.0 * dn + 2.0 + 4.0 * dn2 + 10.0 * n1 + 12.0 * n2) * st
            + (dn + 4.0 + 2.0 * dn2 + 15.0 * n1 + 15.0 * n2) * t4);
    let cov = -k
        * ((dn + 2.0 * dn2) * s4
            + (2.0 * dn + 4.0 * dn2 + 5.0 * n1 + 9.0 * n2) * st
            + (dn + 2.0 + 2.0 * dn2 + 10.0 * n1 + 12.0 * n2) * t4);
    ExactCovariance { var_sigma2, var_tau2, cov_sigma2_tau2: cov }
}

/// Exact covariance matrix of `T = (T₁, T₂)` for Σ = I.
pub fn exact_covariance_t(sigma2: f64, tau2: f64, n: usize, d: usize) -> Matrix2<f64> {
    let n = n as f64;
    let d = d as f64;
    let (s4, st, t4) = (sigma2 * sigma2, sigma2 * tau2, tau2 * tau2);
    let (dn, dn2, n1, n2) = (d / n, d / (n * n), 1.0 / n, 1.0 / (n * n));
    let total = sigma2 + tau2;
    let var_t1 = 2.0 / n * total * total;
    let var_t2 = 2.0 / n
        * ((dn * dn + dn + 2.0 * dn2) * s4
            + (2.0 * dn * dn + 6.0 * dn + 2.0 + 10.0 * dn2 + 10.0 * n1 + 12.0 * n2) * st
            + (dn * dn + 5.0 * dn + 4.0 + 8.0 * dn2 + 15.0 * n1 + 15.0 * n2) * t4);
    let cov = 2.0 / n * (dn * s4 + (2.0 * dn + 2.0 + 3.0 * n1) * st + (dn + 2.0 + 3.0 * n1) * t4);
    Matrix2::new(var_t1, cov, cov, var_t2)
}

/// The matrix `A` with `(σ̂², τ̂²)ᵀ = A (T₁, T₂)ᵀ`.
pub fn identity_coefficients(n: usize, d: usize) -> Matrix2<f64> {
    let n = n as f64;
    let d = d as f64;
    Matrix2::new((d + n + 1.0) / (n + 1.0), -n / (n + 1.0), -d / (n + 1.0), n / (n + 1.0))
}

/// Large-sample covariance of the OLS baselines `(σ̂₀², τ̂₀²)` with `ρ = d/n`:
/// `Var σ̂₀² ≈ 2σ⁴/(n(1−ρ))`, `Var τ̂₀² ≈ (2/n){(σ²+τ²)² + (ρ/(1−ρ) − 1)σ⁴}`,
/// `Cov ≈ −2ρσ⁴/(n(1−ρ))`.
pub fn ols_asymptotic_covariance(sigma2: f64, tau2: f64, n: usize, d: usize) -> Result<ExactCovariance> {
    check_params(sigma2, tau2)?;
    let nf = n as f64;
    let rho = d as f64 / nf;
    if !(rho < 1.0) || n == 0 {
        return Err(Error::Regime("OLS estimator requires d < n".into()));
    }
    let s4 = sigma2 * sigma2;
    let total = sigma2 + tau2;
    Ok(ExactCovariance {
        var_sigma2: 2.0 * s4 / (nf * (1.0 - rho)),
        var_tau2: 2.0 / nf * (total * total + (rho / (1.0 - rho) - 1.0) * s4),
        cov_sigma2_tau2: -2.0 * rho * s4 / (nf * (1.0 - rho)),
    })
}

/// Delta-method variance of `τ²/σ²` from a covariance of `(σ², τ²)`.
fn ratio_variance(sigma2: f64, tau2: f64, cov: &ExactCovariance) -> f64 {
    let snr = tau2 / sigma2;
    (snr * snr * cov.var_sigma2 - 2.0 * snr * cov.cov_sigma2_tau2 + cov.var_tau2) / (sigma2 * sigma2)
}

/// Population spectral moments `m₁, m₂, m₃` used by the unknown-covariance
/// variance formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl SpectralMoments {
    /// Plug-in from `(m̂₁, m̂₂)` alone, taking `m₃ = m̂₂²/m̂₁` so that
    /// `m₁m₃/m₂² = 1`.
    pub fn plug_in(m1_hat: f64, m2_hat: f64) -> Self {
        Self { m1: m1_hat, m2: m2_hat, m3: m2_hat * m2_hat / m1_hat }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Sigma2,
    Tau2,
    Snr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CiMethod {
    IdentityPsi,
    SpectralPsi,
    OlsAsymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub std_error: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Plug-in standard error of the estimate of `target`.
///
/// Negative point estimates are clamped to zero inside the variance formulas
/// only.
pub fn standard_error(
    est: &PointEstimates,
    stats: &QuadraticStats,
    target: Target,
    moments: Option<SpectralMoments>,
) -> Result<(f64, CiMethod)> {
    if target == Target::Snr && est.snr_hat.is_none() {
        return Err(Error::SnrUndefined(est.sigma2_hat));
    }
    let sigma2 = est.sigma2_hat.max(0.0);
    let tau2 = est.tau2_hat.max(0.0);
    let (n, d) = (stats.n, stats.d);
    let root_n = (n as f64).sqrt();
    let pick = |v: &AsymptoticVariances| -> Result<f64> {
        Ok(match target {
            Target::Sigma2 => v.psi1_sq,
            Target::Tau2 => v.psi2_sq,
            Target::Snr => v.psi0_sq()?,
        }
        .max(0.0)
        .sqrt()
            / root_n)
    };
    match est.kind {
        EstimatorKind::IdentityMoM | EstimatorKind::WhitenedMoM => {
            Ok((pick(&psi_identity(sigma2, tau2, n, d)?)?, CiMethod::IdentityPsi))
        }
        EstimatorKind::SpectralMoM => {
            let m =
                moments.ok_or_else(|| Error::Domain("spectral intervals need spectral moments (m1, m2, m3)".into()))?;
            Ok((pick(&psi_spectral(sigma2, tau2, n, d, m.m1, m.m2, m.m3)?)?, CiMethod::SpectralPsi))
        }
        EstimatorKind::OlsResidual => {
            let ratio = d as f64 / n as f64;
            if !(ratio < OLS_MAX_RATIO) {
                return Err(Error::Regime(format!("OLS intervals need d/n < {OLS_MAX_RATIO}, got {ratio:.3}")));
            }
            let cov = ols_asymptotic_covariance(sigma2, tau2, n, d)?;
            let var = match target {
                Target::Sigma2 => cov.var_sigma2,
                Target::Tau2 => cov.var_tau2,
                Target::Snr => ratio_variance(sigma2, tau2, &cov),
            };
            Ok((var.max(0.0).sqrt(), CiMethod::OlsAsymptotic))
        }
    }
}

/// `estimate ± z_{(1+level)/2} · SE`.
pub fn confidence_interval(
    est: &PointEstimates,
    stats: &QuadraticStats,
    target: Target,
    level: f64,
    moments: Option<SpectralMoments>,
) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let (se, method) = standard_error(est, stats, target, moments)?;
    let center = match target {
        Target::Sigma2 => est.sigma2_hat,
        Target::Tau2 => est.tau2_hat,
        Target::Snr => est.snr_hat.ok_or(Error::SnrUndefined(est.sigma2_hat))?,
    };
    let half = normal_quantile(0.5 * (1.0 + level)) * se;
    Ok(ConfidenceInterval { lower: center - half, upper: center + half, level, method, std_error: se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::estimate_identity;

    fn se(v: f64, n: usize) -> f64 {
        (v / n as f64).sqrt()
    }

    #[test]
    fn reported_standard_errors() {
        let v = psi_identity(1.0, 1.0, 1000, 1000).unwrap();
        assert!((se(v.psi1_sq, 1000) - 0.1095).abs() < 5e-5);
        assert!((se(v.psi2_sq, 1000) - 0.1414).abs() < 5e-5);
        assert!((se(v.psi0_sq.unwrap(), 1000) - 0.2366).abs() < 5e-5);
        let v = psi_identity(1.0, 1.0, 500, 1000).unwrap();
        assert!((se(v.psi1_sq, 500) - 0.2000).abs() < 5e-5);
        assert!((se(v.psi2_sq, 500) - 0.2366).abs() < 5e-5);
        assert!((se(v.psi0_sq.unwrap(), 500) - 0.4195).abs() < 5e-5);
    }

    #[test]
    fn zero_signal() {
        let (s2, n, d) = (1.7, 40, 100);
        let v = psi_identity(s2, 0.0, n, d).unwrap();
        let rho = d as f64 / n as f64;
        assert!((v.psi1_sq - 2.0 * s2 * s2 * (rho + 1.0)).abs() < 1e-12);
        assert!((v.psi2_sq - 2.0 * s2 * s2 * rho).abs() < 1e-12);
        assert!((v.psi0_sq.unwrap() - 2.0 * rho).abs() < 1e-12);
        assert!(psi_identity(0.0, 1.0, 10, 10).unwrap().psi0_sq().is_err());
        assert!(psi_identity(-1.0, 1.0, 10, 10).is_err());
    }

    #[test]
    fn spectral_reduces_to_identity() {
        for (s, t, n, d) in [(1.0, 1.0, 500, 1000), (0.3, 2.0, 100, 37), (2.0, 0.0, 10, 200)] {
            let a = psi_identity(s, t, n, d).unwrap();
            let b = psi_spectral(s, t, n, d, 1.0, 1.0, 1.0).unwrap();
            assert_eq!(a, b);
        }
        let v = psi_spectral(1.3, 0.0, 10, 0, 1.0, 1.0, 1.0).unwrap();
        assert!((v.psi1_sq - 2.0 * 1.3 * 1.3).abs() < 1e-12);
        assert!(psi_spectral(1.0, 1.0, 10, 10, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exact_variance_hand_value() {
        let c = exact_covariance_identity(1.0, 0.0, 10, 5);
        assert!((c.var_sigma2 - 20.0 / 121.0 * 1.81).abs() < 1e-14);
        assert!((c.var_sigma2 - 0.29917).abs() < 1e-5);
        assert!((exact_covariance_t(0.4, 0.6, 100, 7)[(0, 0)] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn sandwich_identity() {
        for &(s, t) in &[(1.0, 1.0), (0.2, 3.0), (2.5, 0.0), (0.0, 1.0)] {
            for &(n, d) in &[(1usize, 1usize), (10, 5), (40, 80), (333, 17), (1000, 4000)] {
                let a = identity_coefficients(n, d);
                let lhs = a * exact_covariance_t(s, t, n, d) * a.transpose();
                let rhs = exact_covariance_identity(s, t, n, d).as_matrix();
                let scale = rhs.abs().max();
                assert!((lhs - rhs).abs().max() <= 1e-10 * scale, "({s},{t},{n},{d})");
            }
        }
    }

    #[test]
    fn cauchy_schwarz_on_grid() {
        for s in [0.0, 0.5, 1.0, 4.0] {
            for t in [0.0, 0.5, 1.0, 4.0] {
                for (n, d) in [(2, 1), (10, 50), (300, 30), (50, 50)] {
                    let c = exact_covariance_identity(s, t, n, d);
                    assert!(c.var_sigma2 >= 0.0 && c.var_tau2 >= 0.0);
                    assert!(c.cov_sigma2_tau2.abs() <= (c.var_sigma2 * c.var_tau2).sqrt() * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn exact_converges_to_asymptotic() {
        let (n, d) = (10_000, 20_000);
        let c = exact_covariance_identity(1.0, 1.0, n, d);
        let v = psi_identity(1.0, 1.0, n, d).unwrap();
        assert!((n as f64 * c.var_sigma2 / v.psi1_sq - 1.0).abs() < 0.01);
        assert!((n as f64 * c.var_tau2 / v.psi2_sq - 1.0).abs() < 0.01);

        // relative gap shrinks like 1/n at fixed d/n
        let mut previous = f64::INFINITY;
        for n in [100usize, 1000, 10_000] {
            let c = exact_covariance_identity(1.0, 0.5, n, 2 * n);
            let v = psi_identity(1.0, 0.5, n, 2 * n).unwrap();
            let gap = (n as f64 * c.var_sigma2 / v.psi1_sq - 1.0).abs();
            assert!(gap < 10.0 / n as f64, "n = {n}, gap = {gap}");
            assert!(gap < previous);
            previous = gap;
        }
    }

    #[test]
    fn ols_beats_moment_estimator_only_for_small_ratio() {
        let n = 1000;
        let low = ols_asymptotic_covariance(1.0, 1.0, n, 250).unwrap().var_sigma2;
        let high = ols_asymptotic_covariance(1.0, 1.0, n, 950).unwrap().var_sigma2;
        let mom = |d| exact_covariance_identity(1.0, 1.0, n, d).var_sigma2;
        assert!(low < mom(250));
        assert!(high > mom(950));
        assert!(ols_asymptotic_covariance(1.0, 1.0, n, n).is_err());
    }

    #[test]
    fn interval_halfwidth() {
        let stats = QuadraticStats { t1: 2.0, t2: 0.0, n: 1000, d: 1000 };
        let est = PointEstimates {
            sigma2_hat: 1.0,
            tau2_hat: 1.0,
            snr_hat: Some(1.0),
            snr_raw: 1.0,
            kind: EstimatorKind::IdentityMoM,
            negative_flag: false,
        };
        let ci = confidence_interval(&est, &stats, Target::Sigma2, 0.95, None).unwrap();
        let half = 0.5 * (ci.upper - ci.lower);
        assert!((half - 1.959963984540054 * (12.0f64 / 1000.0).sqrt()).abs() < 1e-12);
        assert!((half - 0.2147).abs() < 1e-4);
        assert_eq!(ci.method, CiMethod::IdentityPsi);

        let tiny = confidence_interval(&est, &stats, Target::Sigma2, 1e-9, None).unwrap();
        assert!(tiny.upper - tiny.lower < 1e-8);
        assert!(confidence_interval(&est, &stats, Target::Sigma2, 1.0, None).is_err());
    }

    #[test]
    fn snr_interval_requires_guard() {
        let stats = QuadraticStats { t1: 1.0, t2: 3.0, n: 1, d: 1 };
        let est = estimate_identity(&stats);
        assert!(matches!(confidence_interval(&est, &stats, Target::Snr, 0.9, None), Err(Error::SnrUndefined(_))));
    }

    #[test]
    fn negative_estimates_are_clamped_inside_psi() {
        let stats = QuadraticStats { t1: 1.0, t2: 0.0, n: 100, d: 300 };
        let est = PointEstimates {
            sigma2_hat: 1.5,
            tau2_hat: -0.5,
            snr_hat: Some(-1.0 / 3.0),
            snr_raw: -1.0 / 3.0,
            kind: EstimatorKind::IdentityMoM,
            negative_flag: true,
        };
        let ci = confidence_interval(&est, &stats, Target::Tau2, 0.95, None).unwrap();
        let expected = psi_identity(1.5, 0.0, 100, 300).unwrap().psi2_sq.sqrt() / 10.0;
        assert!((ci.std_error - expected).abs() < 1e-15);
        assert!((ci.lower + ci.upper) / 2.0 + 0.5 < 1e-12);
    }

    #[test]
    fn spectral_and_ols_methods() {
        let stats = QuadraticStats { t1: 2.0, t2: 0.0, n: 200, d: 100 };
        let mut est = PointEstimates {
            sigma2_hat: 1.0,
            tau2_hat: 1.0,
            snr_hat: Some(1.0),
            snr_raw: 1.0,
            kind: EstimatorKind::SpectralMoM,
            negative_flag: false,
        };
        assert!(confidence_interval(&est, &stats, Target::Sigma2, 0.95, None).is_err());
        let m = SpectralMoments { m1: 1.0, m2: 1.0, m3: 1.0 };
        let sp = confidence_interval(&est, &stats, Target::Snr, 0.95, Some(m)).unwrap();
        assert_eq!(sp.method, CiMethod::SpectralPsi);
        est.kind = EstimatorKind::IdentityMoM;
        let id = confidence_interval(&est, &stats, Target::Snr, 0.95, None).unwrap();
        assert!((sp.std_error - id.std_error).abs() < 1e-15);

        est.kind = EstimatorKind::OlsResidual;
        let ols = confidence_interval(&est, &stats, Target::Sigma2, 0.95, None).unwrap();
        assert_eq!(ols.method, CiMethod::OlsAsymptotic);
        assert!((ols.std_error - (2.0f64 / (200.0 * 0.5)).sqrt()).abs() < 1e-15);
        let wide = QuadraticStats { n: 100, d: 96, ..stats };
        assert!(matches!(confidence_interval(&est, &wide, Target::Sigma2, 0.95, None), Err(Error::Regime(_))));
    }

    #[test]
    fn plug_in_moments_have_unit_ratio() {
        let m = SpectralMoments::plug_in(1.3, 2.2);
        assert!((m.m1 * m.m3 / (m.m2 * m.m2) - 1.0).abs() < 1e-15);
    }
}
