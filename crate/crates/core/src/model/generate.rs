//! Seeded generators for designs, coefficient vectors, and responses.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::covariance::{covariance_root, CovarianceSpec};
use super::{ModelParams, RegressionSample};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

/// Distribution of the predictor rows `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignDistribution {
    GaussianIsotropic,
    Gaussian(CovarianceSpec),
    /// Entries iid uniform on {-1, +1}.
    Rademacher,
}

impl DesignDistribution {
    /// The population covariance of a row.
    pub fn covariance(&self) -> CovarianceSpec {
        match self {
            DesignDistribution::Gaussian(spec) => spec.clone(),
            _ => CovarianceSpec::Identity,
        }
    }
}

/// Draws design matrices for a fixed distribution and dimension. The matrix
/// square root is computed once at construction.
#[derive(Debug, Clone)]
pub struct DesignSampler {
    d: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Isotropic,
    Rademacher,
    /// AR(1) rows via `x_j = α x_{j-1} + √(1-α²) z_j`, i.e. multiplication by
    /// the lower Cholesky factor of Σ.
    Ar1 {
        alpha: f64,
        innovation: f64,
    },
    Root(DMatrix<f64>),
}

impl DesignSampler {
    pub fn new(dist: &DesignDistribution, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Dimension("d must be at least 1".into()));
        }
        let kind = match dist {
            DesignDistribution::GaussianIsotropic => SamplerKind::Isotropic,
            DesignDistribution::Rademacher => SamplerKind::Rademacher,
            DesignDistribution::Gaussian(spec) => match spec {
                CovarianceSpec::Identity => SamplerKind::Isotropic,
                CovarianceSpec::Ar1 { alpha } => {
                    spec.validate(d)?;
                    SamplerKind::Ar1 { alpha: *alpha, innovation: (1.0 - alpha * alpha).sqrt() }
                }
                _ => SamplerKind::Root(covariance_root(spec, d)?),
            },
        };
        Ok(Self { d, kind })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// An `n × d` design; rows are filled in order, left to right.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::Dimension("n must be at least 1".into()));
        }
        let d = self.d;
        let mut rows = vec![0.0; n * d];
        match &self.kind {
            SamplerKind::Rademacher => {
                for v in rows.iter_mut() {
                    *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
            }
            SamplerKind::Isotropic | SamplerKind::Root(_) => {
                for v in rows.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
            }
            SamplerKind::Ar1 { alpha, innovation } => {
                for row in rows.chunks_mut(d) {
                    let mut prev: f64 = StandardNormal.sample(rng);
                    row[0] = prev;
                    for v in row.iter_mut().skip(1) {
                        let z: f64 = StandardNormal.sample(rng);
                        prev = alpha * prev + innovation * z;
                        *v = prev;
                    }
                }
            }
        }
        let x = DMatrix::from_row_slice(n, d, &rows);
        Ok(match &self.kind {
            SamplerKind::Root(root) => x * root,
            _ => x,
        })
    }
}

/// `n × d` design from `dist`, reproducible for a fixed seed.
pub fn generate_design(dist: &DesignDistribution, n: usize, d: usize, seed: u64) -> Result<DMatrix<f64>> {
    let sampler = DesignSampler::new(dist, d)?;
    sampler.sample(n, &mut substream(seed, 0, Purpose::Design))
}

/// How the coefficient vector is built.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPattern {
    /// First ⌊d/2⌋ coordinates uniform(0,1), the rest N(0,1), rescaled so
    /// that `‖β‖² = target_norm_sq`.
    HalfUniformHalfNormal {
        target_norm_sq: f64,
    },
    /// `bumps` copies of (1,2,3,4,3,2,1) centred at distinct random multiples
    /// of `spacing`, rescaled so that `βᵀΣβ = target_tau1_sq`.
    BumpSparse {
        bumps: usize,
        spacing: usize,
        target_tau1_sq: f64,
    },
    /// As `BumpSparse`, with a bump at every admissible multiple of `spacing`.
    BumpDense {
        spacing: usize,
        target_tau1_sq: f64,
    },
    Explicit(DVector<f64>),
}

const BUMP: [f64; 7] = [1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0];

/// Bump centres (1-based) are `spacing, 2·spacing, ...` up to `d - spacing`.
fn bump_centers(spacing: usize, d: usize) -> Result<Vec<usize>> {
    if spacing < 8 {
        return Err(Error::Pattern(format!("bump spacing must be at least 8, got {spacing}")));
    }
    if d < 2 * spacing {
        return Err(Error::Pattern(format!("bump spacing {spacing} needs d >= {}, got d = {d}", 2 * spacing)));
    }
    Ok((1..).map(|j| j * spacing).take_while(|&k| k + spacing <= d).collect())
}

fn place_bumps(centers: &[usize], d: usize) -> DVector<f64> {
    let mut beta = DVector::zeros(d);
    for &k in centers {
        for (offset, w) in BUMP.iter().enumerate() {
            // 1-based centre k occupies 1-based coordinates k-3..=k+3
            beta[k - 4 + offset] = *w;
        }
    }
    beta
}

fn rescale(beta: DVector<f64>, current: f64, target: f64) -> Result<DVector<f64>> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::Pattern(format!("normalization target must be finite and >= 0, got {target}")));
    }
    if target == 0.0 {
        return Ok(DVector::zeros(beta.len()));
    }
    if !(current > 0.0) {
        return Err(Error::Pattern("cannot rescale a zero vector".into()));
    }
    Ok(beta * (target / current).sqrt())
}

/// Coefficient vector of length `d`, reproducible for a fixed seed.
pub fn generate_beta<R: Rng + ?Sized>(
    pattern: &BetaPattern,
    d: usize,
    cov: &CovarianceSpec,
    rng: &mut R,
) -> Result<DVector<f64>> {
    match pattern {
        BetaPattern::Explicit(v) => {
            if v.len() != d {
                return Err(Error::Dimension(format!("explicit beta has length {}, expected {d}", v.len())));
            }
            Ok(v.clone())
        }
        BetaPattern::HalfUniformHalfNormal { target_norm_sq } => {
            let half = d / 2;
            let raw = DVector::from_iterator(
                d,
                (0..d).map(|j| if j < half { rng.random::<f64>() } else { StandardNormal.sample(&mut *rng) }),
            );
            let norm_sq = raw.norm_squared();
            rescale(raw, norm_sq, *target_norm_sq)
        }
        BetaPattern::BumpSparse { bumps, spacing, target_tau1_sq } => {
            let all = bump_centers(*spacing, d)?;
            if *bumps == 0 || *bumps > all.len() {
                return Err(Error::Pattern(format!(
                    "requested {bumps} bumps but only {} centres are available",
                    all.len()
                )));
            }
            // distinct centres with spacing >= 8 never overlap
            let mut picked: Vec<usize> =
                rand::seq::index::sample(rng, all.len(), *bumps).into_iter().map(|i| all[i]).collect();
            picked.sort_unstable();
            let raw = place_bumps(&picked, d);
            let tau = raw.dot(&cov.apply(&raw));
            rescale(raw, tau, *target_tau1_sq)
        }
        BetaPattern::BumpDense { spacing, target_tau1_sq } => {
            let all = bump_centers(*spacing, d)?;
            let raw = place_bumps(&all, d);
            let tau = raw.dot(&cov.apply(&raw));
            rescale(raw, tau, *target_tau1_sq)
        }
    }
}

/// Draws `y = Xβ + ε` with `ε ~ N(0, σ² I)` from separate design and noise streams.
pub fn simulate_with<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    sampler: &DesignSampler,
    beta: &DVector<f64>,
    sigma2: f64,
    n: usize,
    design_rng: &mut R1,
    noise_rng: &mut R2,
) -> Result<RegressionSample> {
    if beta.len() != sampler.d() {
        return Err(Error::Dimension(format!("beta has length {}, design has {} columns", beta.len(), sampler.d())));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::Domain(format!("sigma2 must be >= 0, got {sigma2}")));
    }
    let x = sampler.sample(n, design_rng)?;
    let sd = sigma2.sqrt();
    let mut y = &x * beta;
    for v in y.iter_mut() {
        let e: f64 = StandardNormal.sample(noise_rng);
        *v += sd * e;
    }
    RegressionSample::new(y, x)
}

/// One dataset from `params` and `dist`, reproducible for a fixed seed.
pub fn simulate_sample(
    params: &ModelParams,
    dist: &DesignDistribution,
    n: usize,
    seed: u64,
) -> Result<RegressionSample> {
    let sampler = DesignSampler::new(dist, params.beta.len())?;
    simulate_with(
        &sampler,
        &params.beta,
        params.sigma2,
        n,
        &mut substream(seed, 0, Purpose::Design),
        &mut substream(seed, 0, Purpose::Noise),
    )
}
