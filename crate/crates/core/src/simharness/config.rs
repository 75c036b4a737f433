use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BetaPattern, CovarianceSpec, DesignDistribution};
use crate::rng::{substream, Purpose};

fn default_replicates() -> usize {
    500
}

fn default_level() -> f64 {
    0.95
}

/// One simulation study. Field names are the TOML keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: usize,
    pub d: usize,
    pub sigma2: f64,
    pub design: DesignConfig,
    pub beta_pattern: BetaConfig,
    /// Registry names, e.g. `identity`, `oracle`, `spectral`, `ols`.
    pub estimators: Vec<String>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default = "default_level")]
    pub confidence_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignConfig {
    Gaussian {
        #[serde(default)]
        covariance: CovarianceConfig,
    },
    /// iid ±1 entries; covariance `I`.
    Rademacher,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceConfig {
    #[default]
    Identity,
    Ar1 {
        alpha: f64,
    },
    /// `Σ = factor · ZᵀZ` with a `rows × d` standard normal `Z` drawn once
    /// per experiment; `factor` defaults to `1/rows`.
    SampleScaled {
        rows: usize,
        factor: Option<f64>,
    },
    /// A `d × d` matrix in a headerless CSV file, resolved relative to the
    /// config file.
    Known {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaConfig {
    HalfUniformHalfNormal { target_norm_sq: f64 },
    BumpSparse { bumps: usize, spacing: usize, target_tau1_sq: f64 },
    BumpDense { spacing: usize, target_tau1_sq: f64 },
    Explicit { values: Vec<f64> },
}

impl BetaConfig {
    pub fn pattern(&self) -> BetaPattern {
        match self {
            BetaConfig::HalfUniformHalfNormal { target_norm_sq } => {
                BetaPattern::HalfUniformHalfNormal { target_norm_sq: *target_norm_sq }
            }
            BetaConfig::BumpSparse { bumps, spacing, target_tau1_sq } => {
                BetaPattern::BumpSparse { bumps: *bumps, spacing: *spacing, target_tau1_sq: *target_tau1_sq }
            }
            BetaConfig::BumpDense { spacing, target_tau1_sq } => {
                BetaPattern::BumpDense { spacing: *spacing, target_tau1_sq: *target_tau1_sq }
            }
            BetaConfig::Explicit { values } => BetaPattern::Explicit(DVector::from_vec(values.clone())),
        }
    }
}

impl CovarianceConfig {
    /// Materializes the covariance. Random factors come from the experiment's
    /// covariance stream.
    pub fn to_spec(&self, d: usize, master_seed: u64, base_dir: &Path) -> Result<CovarianceSpec> {
        let spec = match self {
            CovarianceConfig::Identity => CovarianceSpec::Identity,
            CovarianceConfig::Ar1 { alpha } => CovarianceSpec::Ar1 { alpha: *alpha },
            CovarianceConfig::SampleScaled { rows, factor } => {
                if *rows == 0 {
                    return Err(Error::Covariance("sample_scaled needs rows >= 1".into()));
                }
                let mut rng = substream(master_seed, 0, Purpose::Covariance);
                let values: Vec<f64> = (0..rows * d).map(|_| StandardNormal.sample(&mut rng)).collect();
                CovarianceSpec::SampleScaled {
                    z: DMatrix::from_row_slice(*rows, d, &values),
                    factor: factor.unwrap_or(1.0 / *rows as f64),
                }
            }
            CovarianceConfig::Known { path } => CovarianceSpec::Known(read_matrix_csv(&base_dir.join(path))?),
        };
        spec.validate(d)?;
        Ok(spec)
    }
}

impl SimulationConfig {
    /// Checks everything that does not require drawing random numbers.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Data(format!("{name}: {msg}")));
        if self.n == 0 {
            return field("n", "must be >= 1".into());
        }
        if self.d == 0 {
            return field("d", "must be >= 1".into());
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return field("sigma2", format!("must be finite and >= 0, got {}", self.sigma2));
        }
        if self.replicates == 0 {
            return field("replicates", "must be >= 1".into());
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return field("confidence_level", format!("must lie in (0, 1), got {}", self.confidence_level));
        }
        if self.estimators.is_empty() {
            return field("estimators", "at least one estimator is required".into());
        }
        for (i, a) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(a) {
                return field("estimators", format!("`{a}` is listed twice"));
            }
        }
        if let BetaConfig::Explicit { values } = &self.beta_pattern {
            if values.len() != self.d {
                return field("beta_pattern.values", format!("has length {}, expected d = {}", values.len(), self.d));
            }
        }
        Ok(())
    }

    pub fn design_distribution(&self, base_dir: &Path) -> Result<DesignDistribution> {
        Ok(match &self.design {
            DesignConfig::Rademacher => DesignDistribution::Rademacher,
            DesignConfig::Gaussian { covariance } => match covariance.to_spec(self.d, self.master_seed, base_dir)? {
                CovarianceSpec::Identity => DesignDistribution::GaussianIsotropic,
                spec => DesignDistribution::Gaussian(spec),
            },
        })
    }
}

/// Reads a headerless CSV of numbers into a matrix.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "{}: row {}, column {}: `{cell}` is not a number",
                        path.display(),
                        i + 1,
                        j + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Data(format!("{}: empty matrix", path.display())));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Data(format!(
            "{}: row {} has {} entries, expected {ncols}",
            path.display(),
            i + 1,
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn base() -> SimulationConfig {
        SimulationConfig {
            n: 10,
            d: 5,
            sigma2: 1.0,
            design: DesignConfig::Gaussian { covariance: CovarianceConfig::Identity },
            beta_pattern: BetaConfig::HalfUniformHalfNormal { target_norm_sq: 1.0 },
            estimators: vec!["identity".into()],
            replicates: 3,
            master_seed: 1,
            confidence_level: 0.95,
        }
    }

    #[test]
    fn validation_names_the_field() {
        assert!(base().validate().is_ok());
        let mut c = base();
        c.replicates = 0;
        assert!(c.validate().unwrap_err().to_string().contains("replicates"));
        let mut c = base();
        c.estimators = vec!["identity".into(), "identity".into()];
        assert!(c.validate().is_err());
        let mut c = base();
        c.beta_pattern = BetaConfig::Explicit { values: vec![1.0] };
        assert!(c.validate().unwrap_err().to_string().contains("beta_pattern.values"));
    }

    #[test]
    fn sample_scaled_is_reproducible() {
        let cfg = CovarianceConfig::SampleScaled { rows: 8, factor: None };
        let a = cfg.to_spec(4, 9, Path::new(".")).unwrap();
        let b = cfg.to_spec(4, 9, Path::new(".")).unwrap();
        assert_eq!(a, b);
        match a {
            CovarianceSpec::SampleScaled { z, factor } => {
                assert_eq!(z.shape(), (8, 4));
                assert_eq!(factor, 0.125);
            }
            _ => panic!("wrong spec"),
        }
    }

    #[test]
    fn matrix_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        writeln!(std::fs::File::create(&path).unwrap(), "2, 0.5\n0.5, 1").unwrap();
        let m = read_matrix_csv(&path).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        let spec = CovarianceConfig::Known { path: "s.csv".into() }.to_spec(2, 0, dir.path()).unwrap();
        assert_eq!(spec, CovarianceSpec::Known(m));

        writeln!(std::fs::File::create(&path).unwrap(), "2,x\n1,1").unwrap();
        assert!(read_matrix_csv(&path).unwrap_err().to_string().contains("row 1, column 2"));
        assert!(read_matrix_csv(&dir.path().join("missing.csv")).is_err());
    }
}
