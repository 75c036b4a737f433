use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{check_pair, MomentId};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::stats::RunningMoments;

/// Draws per substream. Shards are merged in index order, so results do not
/// depend on the thread count.
pub const ORACLE_SHARD: usize = 4096;

/// The functional `f(W)` behind a [`MomentId`].
pub fn moment_functional(which: MomentId, w: &DMatrix<f64>, beta: &DVector<f64>) -> f64 {
    let tr = || w.trace();
    let wb = || w * beta;
    let bwb = || beta.dot(&wb());
    let bw2b = || wb().norm_squared();
    match which {
        MomentId::TrW => tr(),
        MomentId::TrWSqOfSum => tr() * tr(),
        MomentId::TrW2 => w.norm_squared(),
        MomentId::BWB => bwb(),
        MomentId::BW2B => bw2b(),
        MomentId::TrWBWB => tr() * bwb(),
        MomentId::TrWBW2B => tr() * bw2b(),
        MomentId::BWBBW2B => bwb() * bw2b(),
        MomentId::BW3B => {
            let v = wb();
            v.dot(&(w * &v))
        }
        MomentId::BW2BSq => bw2b().powi(2),
    }
}

/// Monte Carlo mean and standard error of `f(W)`, `W = XᵀX` with `n` rows
/// `x_i ~ N(0, Σ)`.
pub fn mc_moment_oracle(
    which: MomentId,
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_pair(beta, sigma)?;
    if draws < 2 {
        return Err(Error::Domain("the oracle needs at least 2 draws".into()));
    }
    let d = beta.len();
    let chol = sigma.clone().cholesky().ok_or_else(|| Error::Covariance("Sigma is not positive definite".into()))?;
    let lt = chol.l().transpose();
    let shards = draws.div_ceil(ORACLE_SHARD);
    let parts: Vec<RunningMoments> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = substream(seed, s as u64, Purpose::Oracle);
            let count = ORACLE_SHARD.min(draws - s * ORACLE_SHARD);
            let mut acc = RunningMoments::new();
            let mut z = DMatrix::<f64>::zeros(n, d);
            for _ in 0..count {
                z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
                let x = &z * &lt;
                acc.push(moment_functional(which, &x.tr_mul(&x), beta));
            }
            acc
        })
        .collect();
    let mut total = RunningMoments::new();
    for p in &parts {
        total.merge(p);
    }
    Ok((total.mean(), total.stderr()))
}
