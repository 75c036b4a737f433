//! Predictor covariance structures, matrix roots, and whitening.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest are treated as zero.
pub const NEAR_SINGULAR_RATIO: f64 = 1e-12;

/// Tolerance for the symmetry check on user-supplied matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Covariance `Σ = Cov(x_i)` of the predictors.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Identity,
    /// An explicit symmetric positive-definite matrix.
    Known(DMatrix<f64>),
    /// `σ_ij = alpha^|i-j|`, never stored densely.
    Ar1 {
        alpha: f64,
    },
    /// `Σ = factor · ZᵀZ` for an `m × d` matrix `Z`.
    SampleScaled {
        z: DMatrix<f64>,
        factor: f64,
    },
}

impl CovarianceSpec {
    /// Checks that the spec is usable at dimension `d`. Positive definiteness
    /// of dense specs is checked later, when a root is taken.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            CovarianceSpec::Identity => Ok(()),
            CovarianceSpec::Known(s) => {
                if s.nrows() != d || s.ncols() != d {
                    return Err(Error::Dimension(format!(
                        "known covariance is {}x{}, expected {d}x{d}",
                        s.nrows(),
                        s.ncols()
                    )));
                }
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Covariance("covariance has non-finite entries".into()));
                }
                let asym = max_asymmetry(s);
                if asym > SYMMETRY_TOL {
                    return Err(Error::Covariance(format!("covariance is not symmetric (max asymmetry {asym:e})")));
                }
                Ok(())
            }
            CovarianceSpec::Ar1 { alpha } => {
                if !alpha.is_finite() || alpha.abs() >= 1.0 {
                    return Err(Error::Covariance(format!("AR(1) coefficient must satisfy |alpha| < 1, got {alpha}")));
                }
                Ok(())
            }
            CovarianceSpec::SampleScaled { z, factor } => {
                if z.ncols() != d {
                    return Err(Error::Dimension(format!(
                        "sample covariance factor has {} columns, expected {d}",
                        z.ncols()
                    )));
                }
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::Covariance(format!("scale factor must be positive, got {factor}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CovarianceSpec::Identity)
    }

    /// `Σ v` without materializing `Σ` where the structure allows it.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            CovarianceSpec::Identity => v.clone(),
            CovarianceSpec::Known(s) => s * v,
            CovarianceSpec::Ar1 { alpha } => ar1_apply(*alpha, v),
            CovarianceSpec::SampleScaled { z, factor } => (z.transpose() * (z * v)) * *factor,
        }
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Two-pass O(d) product with the AR(1) correlation matrix:
/// forward and backward geometric filters, minus the doubly counted diagonal.
fn ar1_apply(alpha: f64, v: &DVector<f64>) -> DVector<f64> {
    let d = v.len();
    let mut forward = DVector::zeros(d);
    let mut backward = DVector::zeros(d);
    let mut acc = 0.0;
    for i in 0..d {
        acc = v[i] + alpha * acc;
        forward[i] = acc;
    }
    acc = 0.0;
    for i in (0..d).rev() {
        acc = v[i] + alpha * acc;
        backward[i] = acc;
    }
    forward + backward - v
}

/// Dense `d × d` matrix for `spec`.
pub fn materialize_covariance(spec: &CovarianceSpec, d: usize) -> Result<DMatrix<f64>> {
    spec.validate(d)?;
    Ok(match spec {
        CovarianceSpec::Identity => DMatrix::identity(d, d),
        CovarianceSpec::Known(s) => s.clone(),
        CovarianceSpec::Ar1 { alpha } => DMatrix::from_fn(d, d, |i, j| alpha.powi(i.abs_diff(j) as i32)),
        CovarianceSpec::SampleScaled { z, factor } => z.tr_mul(z) * *factor,
    })
}

/// Eigendecomposition of a symmetric positive-definite covariance, rejecting
/// near-singular spectra.
pub(crate) fn spd_eigen(sigma: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let eig = SymmetricEigen::new(sigma);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= NEAR_SINGULAR_RATIO * max {
        return Err(Error::Covariance(format!(
            "covariance is singular or not positive definite (eigenvalues in [{min:e}, {max:e}])"
        )));
    }
    Ok(eig)
}

fn spectral_function(spec: &CovarianceSpec, d: usize, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = spd_eigen(materialize_covariance(spec, d)?)?;
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(d, d, |i, j| v[(i, j)] * f(eig.eigenvalues[j]));
    let out = scaled * v.transpose();
    Ok((&out + out.transpose()) * 0.5)
}

/// Symmetric inverse square root `R = Σ^{-1/2}`, so that `RᵀR = Σ⁻¹`.
pub fn whitening_root(spec: &CovarianceSpec, d: usize) -> Result<DMatrix<f64>> {
    spec.validate(d)?;
    if spec.is_identity() {
        return Ok(DMatrix::identity(d, d));
    }
    spectral_function(spec, d, |l| 1.0 / l.sqrt())
}

/// Symmetric square root `Σ^{1/2}`.
pub fn covariance_root(spec: &CovarianceSpec, d: usize) -> Result<DMatrix<f64>> {
    spec.validate(d)?;
    if spec.is_identity() {
        return Ok(DMatrix::identity(d, d));
    }
    spectral_function(spec, d, f64::sqrt)
}

/// `Σ⁻¹`. AR(1) uses the closed-form tridiagonal inverse.
pub fn precision_matrix(spec: &CovarianceSpec, d: usize) -> Result<DMatrix<f64>> {
    spec.validate(d)?;
    match spec {
        CovarianceSpec::Identity => Ok(DMatrix::identity(d, d)),
        CovarianceSpec::Ar1 { alpha } => Ok(ar1_precision(*alpha, d)),
        _ => spectral_function(spec, d, |l| 1.0 / l),
    }
}

fn ar1_precision(alpha: f64, d: usize) -> DMatrix<f64> {
    if d == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let scale = 1.0 / (1.0 - alpha * alpha);
    let mut p = DMatrix::zeros(d, d);
    for i in 0..d {
        p[(i, i)] = if i == 0 || i == d - 1 { scale } else { (1.0 + alpha * alpha) * scale };
        if i + 1 < d {
            p[(i, i + 1)] = -alpha * scale;
            p[(i + 1, i)] = -alpha * scale;
        }
    }
    p
}

/// Evaluates the whitened quadratic form `vᵀΣ⁻¹v = ‖Rv‖²`.
///
/// Whitened estimators only need `‖(XR)ᵀy‖² = (Xᵀy)ᵀ Σ⁻¹ (Xᵀy)`, so the dense
/// root is never formed for Identity or AR(1).
#[derive(Debug, Clone)]
pub enum Whitener {
    Identity,
    Ar1 { alpha: f64 },
    Dense(DMatrix<f64>),
}

impl Whitener {
    pub fn new(spec: &CovarianceSpec, d: usize) -> Result<Self> {
        spec.validate(d)?;
        Ok(match spec {
            CovarianceSpec::Identity => Whitener::Identity,
            CovarianceSpec::Ar1 { alpha } => Whitener::Ar1 { alpha: *alpha },
            _ => Whitener::Dense(precision_matrix(spec, d)?),
        })
    }

    pub fn quadratic_form(&self, v: &DVector<f64>) -> f64 {
        match self {
            Whitener::Identity => v.norm_squared(),
            Whitener::Ar1 { alpha } => ar1_quadratic_form(*alpha, v),
            Whitener::Dense(p) => v.dot(&(p * v)),
        }
    }
}

fn ar1_quadratic_form(alpha: f64, v: &DVector<f64>) -> f64 {
    let d = v.len();
    if d == 1 {
        return v[0] * v[0];
    }
    let mut sq = 0.0;
    let mut interior = 0.0;
    let mut cross = 0.0;
    for i in 0..d {
        sq += v[i] * v[i];
        if i > 0 && i + 1 < d {
            interior += v[i] * v[i];
        }
        if i + 1 < d {
            cross += v[i] * v[i + 1];
        }
    }
    (sq + alpha * alpha * interior - 2.0 * alpha * cross) / (1.0 - alpha * alpha)
}

/// Average lag-one cross-product across rows, the moment estimator of the
/// AR(1) coefficient.
pub fn estimate_ar1_alpha(x: &DMatrix<f64>) -> Result<f64> {
    let (n, d) = x.shape();
    if d < 2 {
        return Err(Error::Dimension(format!("AR(1) coefficient needs at least 2 predictors, got {d}")));
    }
    if n == 0 {
        return Err(Error::Dimension("no observations".into()));
    }
    let mut total = 0.0;
    for j in 1..d {
        total += x.column(j).dot(&x.column(j - 1));
    }
    Ok(total / (n as f64 * (d - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn identity_root_is_identity() {
        let r = whitening_root(&CovarianceSpec::Identity, 3).unwrap();
        assert_eq!(r, DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_root() {
        let spec = CovarianceSpec::Known(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0])));
        let r = whitening_root(&spec, 2).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((r[(1, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert!(r[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn ar1_two_by_two_inverse() {
        let spec = CovarianceSpec::Ar1 { alpha: 0.5 };
        let sigma = materialize_covariance(&spec, 2).unwrap();
        assert_eq!(sigma, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let r = whitening_root(&spec, 2).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0]) * (4.0 / 3.0);
        assert!(max_abs(&(r.transpose() * &r - expected)) < 1e-8);
    }

    #[test]
    fn ar1_fast_paths_match_dense() {
        let alpha = -0.7;
        let spec = CovarianceSpec::Ar1 { alpha };
        for d in [1usize, 2, 3, 17] {
            let sigma = materialize_covariance(&spec, d).unwrap();
            let fast = precision_matrix(&spec, d).unwrap();
            let via_eigen = spectral_function(&spec, d, |l| 1.0 / l).unwrap();
            assert!(max_abs(&(&fast - &via_eigen)) < 1e-8, "d={d}");
            assert!(max_abs(&(&sigma * &fast - DMatrix::identity(d, d))) < 1e-8);

            let v = DVector::from_fn(d, |i, _| (i as f64 * 0.37).sin() + 0.1);
            assert!((spec.apply(&v) - &sigma * &v).amax() < 1e-12);
            let w = Whitener::new(&spec, d).unwrap();
            assert!((w.quadratic_form(&v) - v.dot(&(&via_eigen * &v))).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(whitening_root(&CovarianceSpec::Ar1 { alpha: 1.0 }, 3), Err(Error::Covariance(_))));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(whitening_root(&CovarianceSpec::Known(singular), 2), Err(Error::Covariance(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(whitening_root(&CovarianceSpec::Known(asym), 2), Err(Error::Covariance(_))));
        assert!(matches!(whitening_root(&CovarianceSpec::Known(DMatrix::identity(3, 3)), 2), Err(Error::Dimension(_))));
    }

    #[test]
    fn sample_scaled_apply_matches_dense() {
        let z = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64).cos());
        let spec = CovarianceSpec::SampleScaled { z, factor: 0.25 };
        let sigma = materialize_covariance(&spec, 3).unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert!((spec.apply(&v) - &sigma * &v).amax() < 1e-12);
    }

    #[test]
    fn ar1_alpha_examples() {
        let ones = DMatrix::from_element(3, 4, 1.0);
        assert_eq!(estimate_ar1_alpha(&ones).unwrap(), 1.0);
        let alt = DMatrix::from_row_slice(1, 4, &[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(estimate_ar1_alpha(&alt).unwrap(), -1.0);
        assert!(matches!(estimate_ar1_alpha(&DMatrix::from_element(3, 1, 1.0)), Err(Error::Dimension(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn whitening_inverts_random_spd(d in 1usize..=20, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
            let s = a.tr_mul(&a) + DMatrix::identity(d, d) * 0.5;
            let s = (&s + s.transpose()) * 0.5;
            let spec = CovarianceSpec::Known(s.clone());
            let r = whitening_root(&spec, d).unwrap();
            let resid = &s * (r.transpose() * &r) - DMatrix::identity(d, d);
            prop_assert!(max_abs(&resid) < 1e-8);
            prop_assert!(max_asymmetry(&r) < 1e-12);
        }
    }
}
