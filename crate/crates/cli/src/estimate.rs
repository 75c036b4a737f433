use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdvar::estimators::{EstimatorContext, EstimatorKind, EstimatorRegistry};
use hdvar::model::CovarianceSpec;
use hdvar::simharness::read_matrix_csv;
use hdvar::uncertainty::{confidence_interval, SpectralMoments, Target};
use serde::Serialize;

use crate::data::read_dataset;
use crate::exit::{CliError, CliResult};

/// `--sigma-model` values.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaModel {
    Identity,
    Known(PathBuf),
    Ar1,
    Spectral,
    Ols,
}

impl FromStr for SigmaModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "identity" => SigmaModel::Identity,
            "ar1" => SigmaModel::Ar1,
            "spectral" => SigmaModel::Spectral,
            "ols" => SigmaModel::Ols,
            _ => match s.strip_prefix("known:") {
                Some(p) if !p.is_empty() => SigmaModel::Known(PathBuf::from(p)),
                _ => return Err(format!("expected identity, known:<path>, ar1, spectral or ols, got `{s}`")),
            },
        })
    }
}

impl SigmaModel {
    fn registry_name(&self) -> &'static str {
        match self {
            SigmaModel::Identity => "identity",
            SigmaModel::Known(_) => "known",
            SigmaModel::Ar1 => "ar1",
            SigmaModel::Spectral => "spectral",
            SigmaModel::Ols => "ols",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub sigma2: f64,
    pub tau2: f64,
    pub snr: Option<f64>,
    pub se_sigma2: Option<f64>,
    pub se_tau2: Option<f64>,
    pub se_snr: Option<f64>,
    pub ci_sigma2: Option<[f64; 2]>,
    pub ci_tau2: Option<[f64; 2]>,
    pub ci_snr: Option<[f64; 2]>,
    pub level: f64,
    pub n: usize,
    pub d: usize,
    pub m1_hat: Option<f64>,
    pub m2_hat: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn run_estimate(data: &Path, response: &str, model: &SigmaModel, level: f64) -> CliResult<EstimateReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::Input(format!("--level must lie in (0, 1), got {level}")));
    }
    let (sample, _) = read_dataset(data, response)?;
    let covariance = match model {
        SigmaModel::Known(p) => Some(CovarianceSpec::Known(read_matrix_csv(p)?)),
        _ => None,
    };
    let ctx = EstimatorContext { d: sample.d(), covariance };
    let estimator = EstimatorRegistry::default().build(model.registry_name(), &ctx)?;
    let est = estimator.estimate(&sample)?;
    let moments = match (est.point.kind, est.m1_hat, est.m2_hat) {
        (EstimatorKind::SpectralMoM, Some(m1), Some(m2)) => Some(SpectralMoments::plug_in(m1, m2)),
        _ => None,
    };
    let mut warnings = est.warnings.clone();
    let mut interval = |t: Target, label: &str| match confidence_interval(&est.point, &est.stats, t, level, moments) {
        Ok(ci) => (Some(ci.std_error), Some([ci.lower, ci.upper])),
        Err(e) => {
            warnings.push(format!("no interval for {label}: {e}"));
            (None, None)
        }
    };
    let (se_sigma2, ci_sigma2) = interval(Target::Sigma2, "sigma2");
    let (se_tau2, ci_tau2) = interval(Target::Tau2, "tau2");
    let (se_snr, ci_snr) = interval(Target::Snr, "snr");
    if moments.is_some() {
        warnings.push("spectral intervals assume m1*m3/m2^2 = 1 (m3 is not estimable from m1_hat, m2_hat)".into());
    }
    if est.point.negative_flag {
        warnings.push("a variance estimate is negative".into());
    }
    Ok(EstimateReport {
        estimator: estimator.name().to_string(),
        sigma2: est.point.sigma2_hat,
        tau2: est.point.tau2_hat,
        snr: est.point.snr_hat,
        se_sigma2,
        se_tau2,
        se_snr,
        ci_sigma2,
        ci_tau2,
        ci_snr,
        level,
        n: sample.n(),
        d: sample.d(),
        m1_hat: est.m1_hat,
        m2_hat: est.m2_hat,
        alpha_hat: est.alpha_hat,
        warnings,
    })
}

pub fn render_table(r: &EstimateReport) -> String {
    let num = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
    let ci = |v: Option<[f64; 2]>| v.map_or_else(|| "-".to_string(), |[a, b]| format!("[{a:.6}, {b:.6}]"));
    let mut out = String::new();
    let _ = writeln!(out, "estimator {}  n = {}  d = {}  level = {}", r.estimator, r.n, r.d, r.level);
    let _ = writeln!(out, "{:<8} {:>12} {:>12}  interval", "target", "estimate", "std.err");
    for (name, v, se, c) in [
        ("sigma2", Some(r.sigma2), r.se_sigma2, r.ci_sigma2),
        ("tau2", Some(r.tau2), r.se_tau2, r.ci_tau2),
        ("snr", r.snr, r.se_snr, r.ci_snr),
    ] {
        let _ = writeln!(out, "{name:<8} {:>12} {:>12}  {}", num(v), num(se), ci(c));
    }
    if let (Some(m1), Some(m2)) = (r.m1_hat, r.m2_hat) {
        let _ = writeln!(out, "m1_hat = {m1:.6}  m2_hat = {m2:.6}");
    }
    if let Some(a) = r.alpha_hat {
        let _ = writeln!(out, "alpha_hat = {a:.6}");
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_models() {
        assert_eq!("identity".parse::<SigmaModel>().unwrap(), SigmaModel::Identity);
        assert_eq!("known:/tmp/s.csv".parse::<SigmaModel>().unwrap(), SigmaModel::Known("/tmp/s.csv".into()));
        assert!("known:".parse::<SigmaModel>().is_err());
        assert!("lasso".parse::<SigmaModel>().is_err());
    }
}
