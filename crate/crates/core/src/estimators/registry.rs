use std::collections::BTreeMap;
use std::fmt;

use super::{Estimator, IdentityMoM, OlsResidual, SpectralMoM, WhitenedMoM};
use crate::error::{Error, Result};
use crate::model::CovarianceSpec;

/// What a factory may need to build an estimator.
#[derive(Debug, Clone, Default)]
pub struct EstimatorContext {
    /// Number of predictors.
    pub d: usize,
    /// Covariance used by whitening estimators (`known`, `oracle`).
    pub covariance: Option<CovarianceSpec>,
}

pub type EstimatorFactory = fn(&EstimatorContext) -> Result<Box<dyn Estimator>>;

/// Name → constructor map for every available estimator.
#[derive(Clone)]
pub struct EstimatorRegistry {
    factories: BTreeMap<&'static str, EstimatorFactory>,
}

impl fmt::Debug for EstimatorRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register("identity", |_| Ok(Box::new(IdentityMoM)));
        reg.register("known", |ctx| whitened("known", ctx));
        reg.register("oracle", |ctx| whitened("oracle", ctx));
        reg.register("ar1", |_| Ok(Box::new(WhitenedMoM::ar1_estimated())));
        reg.register("spectral", |_| Ok(Box::new(SpectralMoM)));
        reg.register("ols", |_| Ok(Box::new(OlsResidual)));
        reg
    }
}

fn whitened(name: &'static str, ctx: &EstimatorContext) -> Result<Box<dyn Estimator>> {
    let spec = ctx
        .covariance
        .as_ref()
        .ok_or_else(|| Error::Covariance(format!("estimator `{name}` needs a covariance matrix")))?;
    Ok(Box::new(WhitenedMoM::with_covariance(name, spec, ctx.d)?))
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// Adds or replaces the factory registered under `name`.
    pub fn register(&mut self, name: &'static str, factory: EstimatorFactory) -> &mut Self {
        self.factories.insert(name, factory);
        self
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, ctx: &EstimatorContext) -> Result<Box<dyn Estimator>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownEstimator(name.to_string()))?;
        factory(ctx)
    }
}
