use serde::Serialize;

use super::{condition_b_diagnostics, normality_check, spectral_bias_prediction, Experiment, RawRow};
use crate::error::Result;
use crate::estimators::EstimatorKind;
use crate::stats::RunningMoments;
use crate::uncertainty::{ols_asymptotic_covariance, psi_identity, psi_spectral, Target, OLS_MAX_RATIO};
use crate::wishart::MomentSet;

/// True parameter values of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truth {
    pub sigma2: f64,
    pub tau2: f64,
    /// Undefined when `σ² = 0`.
    pub snr: Option<f64>,
}

impl Truth {
    pub fn get(&self, target: Target) -> Option<f64> {
        match target {
            Target::Sigma2 => Some(self.sigma2),
            Target::Tau2 => Some(self.tau2),
            Target::Snr => self.snr,
        }
    }
}

/// Replicate statistics of one estimator for one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSummary {
    pub truth: Option<f64>,
    /// Replicates with a value.
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    /// `sd/√count`.
    pub mc_se: Option<f64>,
    /// Large-sample standard error at the true parameters.
    pub predicted_se: Option<f64>,
    pub negative_count: usize,
    pub coverage_rate: Option<f64>,
    /// KS distance of `(estimate − truth)/predicted_se` from `N(0, 1)`.
    pub ks_statistic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub kind: EstimatorKind,
    pub failures: usize,
    pub sigma2: TargetSummary,
    pub tau2: TargetSummary,
    pub snr: TargetSummary,
}

impl EstimatorSummary {
    pub fn target(&self, target: Target) -> &TargetSummary {
        match target {
            Target::Sigma2 => &self.sigma2,
            Target::Tau2 => &self.tau2,
            Target::Snr => &self.snr,
        }
    }
}

/// An estimator that could not be built or failed on some replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorFailure {
    pub estimator: String,
    pub replicates_failed: usize,
    /// First error message.
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub n: usize,
    pub d: usize,
    pub replicates: usize,
    pub master_seed: u64,
    pub confidence_level: f64,
    pub truth: Truth,
    pub beta_norm_sq: f64,
    pub moments: MomentSet,
    pub delta1: f64,
    pub delta2: f64,
    /// Predicted `E σ̃² − σ²` for the spectral estimator.
    pub spectral_bias: Option<f64>,
    pub estimators: Vec<EstimatorSummary>,
    pub errors: Vec<EstimatorFailure>,
}

impl SimulationSummary {
    pub fn estimator(&self, name: &str) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.estimator == name)
    }
}

/// `ψ/√n` at the true parameters for an estimator family.
fn predicted_se(exp: &Experiment, kind: EstimatorKind, target: Target) -> Option<f64> {
    let Truth { sigma2, tau2, .. } = exp.truth;
    let (n, d) = (exp.config.n, exp.config.d);
    let pick = |v: crate::uncertainty::AsymptoticVariances| match target {
        Target::Sigma2 => Some(v.psi1_sq),
        Target::Tau2 => Some(v.psi2_sq),
        Target::Snr => v.psi0_sq,
    };
    let var = match kind {
        EstimatorKind::IdentityMoM | EstimatorKind::WhitenedMoM => {
            pick(psi_identity(sigma2, tau2, n, d).ok()?)? / n as f64
        }
        EstimatorKind::SpectralMoM => {
            let [_, m1, m2, m3] = exp.moments.m;
            pick(psi_spectral(sigma2, tau2, n, d, m1, m2, m3).ok()?)? / n as f64
        }
        EstimatorKind::OlsResidual => {
            if !((d as f64 / n as f64) < OLS_MAX_RATIO) {
                return None;
            }
            let c = ols_asymptotic_covariance(sigma2, tau2, n, d).ok()?;
            match target {
                Target::Sigma2 => c.var_sigma2,
                Target::Tau2 => c.var_tau2,
                Target::Snr if sigma2 > 0.0 => {
                    let s = tau2 / sigma2;
                    (s * s * c.var_sigma2 - 2.0 * s * c.cov_sigma2_tau2 + c.var_tau2) / (sigma2 * sigma2)
                }
                Target::Snr => return None,
            }
        }
    };
    (var >= 0.0).then(|| var.sqrt())
}

fn target_summary(exp: &Experiment, kind: EstimatorKind, rows: &[&RawRow], target: Target) -> TargetSummary {
    let values: Vec<f64> = rows.iter().filter_map(|r| r.value(target)).collect();
    let acc: RunningMoments = values.iter().copied().collect();
    let count = values.len();
    let truth = exp.truth.get(target);
    let predicted = predicted_se(exp, kind, target);
    let covered: Vec<bool> = rows.iter().filter_map(|r| r.covered(target)).collect();
    let ks = match (truth, predicted) {
        (Some(t), Some(se)) if se > 0.0 && count > 0 => {
            let z: Vec<f64> = values.iter().map(|v| (v - t) / se).collect();
            normality_check(&z).ok()
        }
        _ => None,
    };
    let finite = |v: f64| v.is_finite().then_some(v);
    TargetSummary {
        truth,
        count,
        mean: finite(acc.mean()),
        sd: finite(acc.sd()),
        mc_se: finite(acc.stderr()),
        predicted_se: predicted,
        negative_count: values.iter().filter(|v| **v < 0.0).count(),
        coverage_rate: (!covered.is_empty())
            .then(|| covered.iter().filter(|c| **c).count() as f64 / covered.len() as f64),
        ks_statistic: ks,
    }
}

/// Aggregates the raw table of `exp`.
pub fn summarize(
    exp: &Experiment,
    estimators: &[(String, EstimatorKind)],
    raw: &[RawRow],
    mut errors: Vec<EstimatorFailure>,
) -> Result<SimulationSummary> {
    let mut summaries = Vec::new();
    for (name, kind) in estimators {
        let rows: Vec<&RawRow> = raw.iter().filter(|r| &r.estimator == name).collect();
        let failed: Vec<&&RawRow> = rows.iter().filter(|r| r.error.is_some()).collect();
        if let Some(first) = failed.first() {
            errors.push(EstimatorFailure {
                estimator: name.clone(),
                replicates_failed: failed.len(),
                message: first.error.clone().unwrap_or_default(),
            });
        }
        summaries.push(EstimatorSummary {
            estimator: name.clone(),
            kind: *kind,
            failures: failed.len(),
            sigma2: target_summary(exp, *kind, &rows, Target::Sigma2),
            tau2: target_summary(exp, *kind, &rows, Target::Tau2),
            snr: target_summary(exp, *kind, &rows, Target::Snr),
        });
    }
    let [delta1, delta2] = condition_b_diagnostics(&exp.beta, &exp.covariance, exp.config.n)?;
    Ok(SimulationSummary {
        n: exp.config.n,
        d: exp.config.d,
        replicates: exp.config.replicates,
        master_seed: exp.config.master_seed,
        confidence_level: exp.config.confidence_level,
        truth: exp.truth,
        beta_norm_sq: exp.beta.norm_squared(),
        moments: exp.moments,
        delta1,
        delta2,
        spectral_bias: spectral_bias_prediction(&exp.moments).ok(),
        estimators: summaries,
        errors,
    })
}
