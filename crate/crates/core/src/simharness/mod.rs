//! Replicated simulation studies.
//!
//! An experiment draws `β` once, then for every replicate draws a fresh
//! design and noise vector from that replicate's own substreams and runs each
//! configured estimator. Replicates are independent, so they run in parallel
//! and the raw table is identical for any thread count.

mod config;
mod diagnostics;
mod summary;

pub use config::{read_matrix_csv, BetaConfig, CovarianceConfig, DesignConfig, SimulationConfig};
pub use diagnostics::{condition_b_diagnostics, normality_check, spectral_bias_prediction};
pub use summary::{summarize, EstimatorFailure, EstimatorSummary, SimulationSummary, TargetSummary, Truth};

use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{Estimate, Estimator, EstimatorContext, EstimatorKind, EstimatorRegistry};
use crate::model::{generate_beta, simulate_with, CovarianceSpec, DesignDistribution, DesignSampler, RegressionSample};
use crate::rng::{substream, Purpose};
use crate::uncertainty::{confidence_interval, SpectralMoments, Target};
use crate::wishart::{population_moments, MomentSet};

/// One row of the raw table: one estimator on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawRow {
    pub replicate: usize,
    pub estimator: String,
    pub sigma2: Option<f64>,
    pub tau2: Option<f64>,
    pub snr: Option<f64>,
    pub sigma2_lo: Option<f64>,
    pub sigma2_hi: Option<f64>,
    pub tau2_lo: Option<f64>,
    pub tau2_hi: Option<f64>,
    pub snr_lo: Option<f64>,
    pub snr_hi: Option<f64>,
    pub covered_sigma2: Option<bool>,
    pub covered_tau2: Option<bool>,
    pub covered_snr: Option<bool>,
    pub error: Option<String>,
}

impl RawRow {
    fn failed(replicate: usize, estimator: &str, err: &Error) -> Self {
        Self {
            replicate,
            estimator: estimator.to_string(),
            sigma2: None,
            tau2: None,
            snr: None,
            sigma2_lo: None,
            sigma2_hi: None,
            tau2_lo: None,
            tau2_hi: None,
            snr_lo: None,
            snr_hi: None,
            covered_sigma2: None,
            covered_tau2: None,
            covered_snr: None,
            error: Some(err.to_string()),
        }
    }

    /// The estimate of `target`, if available.
    pub fn value(&self, target: Target) -> Option<f64> {
        match target {
            Target::Sigma2 => self.sigma2,
            Target::Tau2 => self.tau2,
            Target::Snr => self.snr,
        }
    }

    pub fn covered(&self, target: Target) -> Option<bool> {
        match target {
            Target::Sigma2 => self.covered_sigma2,
            Target::Tau2 => self.covered_tau2,
            Target::Snr => self.covered_snr,
        }
    }
}

/// Construction outcome of one configured estimator.
pub type BuildResult = Result<Box<dyn Estimator>>;

/// A configured experiment with `Σ` and `β` fixed.
pub struct Experiment {
    pub config: SimulationConfig,
    pub covariance: CovarianceSpec,
    pub design: DesignDistribution,
    pub beta: DVector<f64>,
    pub truth: Truth,
    /// Population moments of `(β, Σ)` up to order 3.
    pub moments: MomentSet,
    sampler: DesignSampler,
}

impl Experiment {
    /// Validates the config and draws the covariance factor and `β`.
    /// Relative paths in the config are resolved against `base_dir`.
    pub fn prepare(config: SimulationConfig, base_dir: &Path) -> Result<Self> {
        config.validate()?;
        let design = config.design_distribution(base_dir)?;
        let covariance = design.covariance();
        let beta = generate_beta(
            &config.beta_pattern.pattern(),
            config.d,
            &covariance,
            &mut substream(config.master_seed, 0, Purpose::Beta),
        )?;
        let moments = population_moments(&beta, &covariance, 3)?;
        let tau2 = moments.tau_sq[1];
        let truth = Truth { sigma2: config.sigma2, tau2, snr: (config.sigma2 > 0.0).then(|| tau2 / config.sigma2) };
        let sampler = DesignSampler::new(&design, config.d)?;
        Ok(Self { config, covariance, design, beta, truth, moments, sampler })
    }

    /// The dataset of replicate `r`.
    pub fn sample(&self, r: usize) -> Result<RegressionSample> {
        let seed = self.config.master_seed;
        simulate_with(
            &self.sampler,
            &self.beta,
            self.config.sigma2,
            self.config.n,
            &mut substream(seed, r as u64, Purpose::Design),
            &mut substream(seed, r as u64, Purpose::Noise),
        )
    }

    /// Builds the configured estimators. Unknown names are an error; other
    /// construction failures are reported per estimator.
    pub fn build_estimators(&self, registry: &EstimatorRegistry) -> Result<Vec<(String, BuildResult)>> {
        let ctx = EstimatorContext { d: self.config.d, covariance: Some(self.covariance.clone()) };
        self.config
            .estimators
            .iter()
            .map(|name| {
                if !registry.contains(name) {
                    return Err(Error::UnknownEstimator(name.clone()));
                }
                Ok((name.clone(), registry.build(name, &ctx)))
            })
            .collect()
    }

    /// Raw rows of replicate `r`, one per built estimator.
    pub fn run_replicate(&self, r: usize, estimators: &[(String, Box<dyn Estimator>)]) -> Vec<RawRow> {
        let sample = match self.sample(r) {
            Ok(s) => s,
            Err(e) => return estimators.iter().map(|(name, _)| RawRow::failed(r, name, &e)).collect(),
        };
        estimators
            .iter()
            .map(|(name, est)| match est.estimate(&sample) {
                Ok(e) => self.row(r, name, &e),
                Err(err) => RawRow::failed(r, name, &err),
            })
            .collect()
    }

    fn row(&self, r: usize, name: &str, e: &Estimate) -> RawRow {
        let level = self.config.confidence_level;
        let moments = match (e.point.kind, e.m1_hat, e.m2_hat) {
            (EstimatorKind::SpectralMoM, Some(m1), Some(m2)) => Some(SpectralMoments::plug_in(m1, m2)),
            _ => None,
        };
        let ci = |t: Target| confidence_interval(&e.point, &e.stats, t, level, moments).ok();
        let (cs, ct, cr) = (ci(Target::Sigma2), ci(Target::Tau2), ci(Target::Snr));
        let truth = &self.truth;
        RawRow {
            replicate: r,
            estimator: name.to_string(),
            sigma2: Some(e.point.sigma2_hat),
            tau2: Some(e.point.tau2_hat),
            snr: e.point.snr_hat,
            sigma2_lo: cs.map(|c| c.lower),
            sigma2_hi: cs.map(|c| c.upper),
            tau2_lo: ct.map(|c| c.lower),
            tau2_hi: ct.map(|c| c.upper),
            snr_lo: cr.map(|c| c.lower),
            snr_hi: cr.map(|c| c.upper),
            covered_sigma2: cs.map(|c| c.contains(truth.sigma2)),
            covered_tau2: ct.map(|c| c.contains(truth.tau2)),
            covered_snr: cr.and_then(|c| truth.snr.map(|s| c.contains(s))),
            error: None,
        }
    }

    /// Runs every replicate (in parallel on the current rayon pool) and
    /// summarizes.
    pub fn run(&self, registry: &EstimatorRegistry) -> Result<SimulationOutput> {
        let mut built = Vec::new();
        let mut failures = Vec::new();
        for (name, result) in self.build_estimators(registry)? {
            match result {
                Ok(est) => built.push((name, est)),
                Err(e) => failures.push(EstimatorFailure {
                    estimator: name,
                    replicates_failed: self.config.replicates,
                    message: e.to_string(),
                }),
            }
        }
        let raw: Vec<RawRow> = (0..self.config.replicates)
            .into_par_iter()
            .map(|r| self.run_replicate(r, &built))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect();
        let kinds: Vec<(String, EstimatorKind)> = built.iter().map(|(n, e)| (n.clone(), e.kind())).collect();
        let summary = summarize(self, &kinds, &raw, failures)?;
        Ok(SimulationOutput { summary, raw })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutput {
    pub summary: SimulationSummary,
    pub raw: Vec<RawRow>,
}

/// Prepares and runs `config` with the default estimator registry; relative
/// paths resolve against the working directory.
pub fn run_experiment(config: SimulationConfig) -> Result<SimulationOutput> {
    Experiment::prepare(config, Path::new("."))?.run(&EstimatorRegistry::default())
}
