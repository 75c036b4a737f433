//! Moments of `W ~ Wishart(n, Σ)` paired with a coefficient vector `β`.
//!
//! Three independent routes to the same numbers: closed-form polynomials in
//! the spectral moments ([`closed_form_moment`]), the Letac–Massam
//! permutation expansion ([`letac_moment`]), and Monte Carlo
//! ([`mc_moment_oracle`]).

mod letac;
mod oracle;

pub use letac::{letac_moment, letac_reconstruction, rotation_with_first_column, Permutation, MAX_LETAC_ORDER};
pub use oracle::{mc_moment_oracle, moment_functional, ORACLE_SHARD};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CovarianceSpec;

/// `m_k = tr(Σᵏ)/d` and `τ_k² = βᵀΣᵏβ` for `k = 0..=order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub m: [f64; 4],
    pub tau_sq: [f64; 4],
    pub d: usize,
    /// Highest populated power; entries above it are NaN.
    pub order: usize,
}

impl MomentSet {
    /// Moments for `Σ = I` and `‖β‖² = norm_sq`.
    pub fn identity(norm_sq: f64, d: usize) -> Self {
        Self { m: [1.0; 4], tau_sq: [norm_sq; 4], d, order: 3 }
    }

    fn require(&self, order: usize) -> Result<()> {
        if self.order < order {
            return Err(Error::Domain(format!(
                "moments up to order {order} are needed, only {} available",
                self.order
            )));
        }
        Ok(())
    }
}

/// Traces `tr(Σᵏ)` for `k = 0..=3`.
fn trace_powers(spec: &CovarianceSpec, d: usize, order: usize) -> [f64; 4] {
    let df = d as f64;
    let mut tr = [df, f64::NAN, f64::NAN, f64::NAN];
    match spec {
        CovarianceSpec::Identity => tr = [df; 4],
        CovarianceSpec::Known(s) => {
            tr[1] = s.trace();
            if order >= 2 {
                tr[2] = s.norm_squared();
            }
            if order >= 3 {
                let s2 = s * s;
                tr[3] = s2.component_mul(s).sum();
            }
        }
        CovarianceSpec::SampleScaled { z, factor } => {
            // factor·ZᵀZ and factor·ZZᵀ share their nonzero spectrum
            let g = if z.nrows() <= z.ncols() { z * z.transpose() } else { z.tr_mul(z) } * *factor;
            tr[1] = g.trace();
            tr[2] = g.norm_squared();
            tr[3] = (&g * &g).component_mul(&g).sum();
        }
        CovarianceSpec::Ar1 { alpha } => {
            tr[1] = df;
            tr[2] = ar1_trace_sq(*alpha, d);
            if order >= 3 {
                let mut t3 = 0.0;
                let mut e = DVector::zeros(d);
                for j in 0..d {
                    e[j] = 1.0;
                    let col = spec.apply(&e);
                    t3 += col.dot(&spec.apply(&col));
                    e[j] = 0.0;
                }
                tr[3] = t3;
            }
        }
    }
    tr
}

/// `tr(Σ²) = d + 2 Σ_{k=1}^{d−1} (d − k) α^{2k}` for AR(1) correlations.
fn ar1_trace_sq(alpha: f64, d: usize) -> f64 {
    let a2 = alpha * alpha;
    let mut power = 1.0;
    let mut total = d as f64;
    for k in 1..d {
        power *= a2;
        if power == 0.0 {
            break;
        }
        total += 2.0 * (d - k) as f64 * power;
    }
    total
}

/// Exact `m_k` and `τ_k²` up to `up_to ≤ 3`, using matrix-vector products
/// with `Σ`.
pub fn population_moments(beta: &DVector<f64>, spec: &CovarianceSpec, up_to: usize) -> Result<MomentSet> {
    if up_to > 3 {
        return Err(Error::Domain(format!("moments are available up to order 3, requested {up_to}")));
    }
    let d = beta.len();
    if d == 0 {
        return Err(Error::Dimension("beta is empty".into()));
    }
    spec.validate(d)?;
    let tr = trace_powers(spec, d, up_to);
    let mut m = [f64::NAN; 4];
    let mut tau_sq = [f64::NAN; 4];
    for k in 0..=up_to {
        m[k] = tr[k] / d as f64;
    }
    // τ_{2j}² = ‖Σʲβ‖², τ_{2j+1}² = (Σʲβ)ᵀΣ(Σʲβ)
    let sb = spec.apply(beta);
    tau_sq[0] = beta.norm_squared();
    if up_to >= 1 {
        tau_sq[1] = beta.dot(&sb);
    }
    if up_to >= 2 {
        tau_sq[2] = sb.norm_squared();
    }
    if up_to >= 3 {
        tau_sq[3] = sb.dot(&spec.apply(&sb));
    }
    Ok(MomentSet { m, tau_sq, d, order: up_to })
}

/// The moment functionals of `W` with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MomentId {
    /// `tr W`
    #[serde(rename = "trW")]
    TrW,
    /// `(tr W)²`
    #[serde(rename = "trW_sq_of_sum")]
    TrWSqOfSum,
    /// `tr(W²)`
    #[serde(rename = "trW2")]
    TrW2,
    /// `βᵀWβ`
    #[serde(rename = "bWb")]
    BWB,
    /// `βᵀW²β`
    #[serde(rename = "bW2b")]
    BW2B,
    /// `tr W · βᵀWβ`
    #[serde(rename = "trW_bWb")]
    TrWBWB,
    /// `tr W · βᵀW²β`
    #[serde(rename = "trW_bW2b")]
    TrWBW2B,
    /// `βᵀWβ · βᵀW²β`
    #[serde(rename = "bWb_bW2b")]
    BWBBW2B,
    /// `βᵀW³β`
    #[serde(rename = "bW3b")]
    BW3B,
    /// `(βᵀW²β)²`
    #[serde(rename = "bW2b_sq")]
    BW2BSq,
}

impl MomentId {
    pub const ALL: [MomentId; 10] = [
        MomentId::TrW,
        MomentId::TrWSqOfSum,
        MomentId::TrW2,
        MomentId::BWB,
        MomentId::BW2B,
        MomentId::TrWBWB,
        MomentId::TrWBW2B,
        MomentId::BWBBW2B,
        MomentId::BW3B,
        MomentId::BW2BSq,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MomentId::TrW => "trW",
            MomentId::TrWSqOfSum => "trW_sq_of_sum",
            MomentId::TrW2 => "trW2",
            MomentId::BWB => "bWb",
            MomentId::BW2B => "bW2b",
            MomentId::TrWBWB => "trW_bWb",
            MomentId::TrWBW2B => "trW_bW2b",
            MomentId::BWBBW2B => "bWb_bW2b",
            MomentId::BW3B => "bW3b",
            MomentId::BW2BSq => "bW2b_sq",
        }
    }

    /// Highest power of `Σ` the closed form needs.
    pub fn required_order(&self) -> usize {
        match self {
            MomentId::TrW | MomentId::BWB | MomentId::TrWBWB => 1,
            MomentId::TrWSqOfSum | MomentId::TrW2 | MomentId::BW2B | MomentId::BWBBW2B => 2,
            MomentId::TrWBW2B | MomentId::BW3B | MomentId::BW2BSq => 3,
        }
    }
}

impl fmt::Display for MomentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MomentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MomentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown moment id `{s}`")))
    }
}

/// Closed-form `E f(W)` for `W ~ Wishart(n, Σ)`.
pub fn closed_form_moment(which: MomentId, ms: &MomentSet, n: usize) -> Result<f64> {
    ms.require(which.required_order())?;
    let n = n as f64;
    let d = ms.d as f64;
    let [_, m1, m2, _] = ms.m;
    let [_, t1, t2, t3] = ms.tau_sq;
    Ok(match which {
        MomentId::TrW => d * n * m1,
        MomentId::TrWSqOfSum => d * d * n * n * m1 * m1 + 2.0 * d * n * m2,
        MomentId::TrW2 => d * d * n * m1 * m1 + d * n * (n + 1.0) * m2,
        MomentId::BWB => n * t1,
        MomentId::BW2B => d * n * m1 * t1 + n * (n + 1.0) * t2,
        MomentId::TrWBWB => d * n * n * m1 * t1 + 2.0 * n * t2,
        MomentId::TrWBW2B => {
            d * d * n * n * m1 * m1 * t1
                + d * n * (n * n + n + 2.0) * m1 * t2
                + 2.0 * d * n * m2 * t1
                + 4.0 * n * (n + 1.0) * t3
        }
        MomentId::BWBBW2B => d * n * (n + 2.0) * m1 * t1 * t1 + n * (n + 2.0) * (n + 3.0) * t1 * t2,
        MomentId::BW3B => {
            d * d * n * m1 * m1 * t1
                + 2.0 * d * n * (n + 1.0) * m1 * t2
                + d * n * (n + 1.0) * m2 * t1
                + n * (n * n + 3.0 * n + 4.0) * t3
        }
        MomentId::BW2BSq => {
            d * d * n * (n + 2.0) * m1 * m1 * t1 * t1
                + 2.0 * d * n * (n + 2.0) * (n + 3.0) * m1 * t1 * t2
                + 2.0 * d * n * (n + 2.0) * m2 * t1 * t1
                + 4.0 * n * (n + 2.0) * (n + 3.0) * t1 * t3
                + n * (n + 1.0) * (n + 2.0) * (n + 3.0) * t2 * t2
        }
    })
}

/// A fixed `(β, Σ, n)` at which the three moment routes are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckPoint {
    pub name: &'static str,
    pub beta: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub n: usize,
}

impl CheckPoint {
    pub fn moments(&self) -> MomentSet {
        population_moments(&self.beta, &CovarianceSpec::Known(self.sigma.clone()), 3)
            .expect("check points are valid by construction")
    }
}

/// Reference points: `Σ = I` (d = 2, n = 3), `Σ = diag(1, 2, 3)` with
/// `β = (1, 0, 1)` (n = 5), and a fixed random SPD `Σ` with random `β`
/// (d = 4, n = 7).
pub fn check_points() -> Vec<CheckPoint> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = crate::rng::substream(0x5EED, 0, crate::rng::Purpose::Covariance);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let a = DMatrix::from_fn(4, 4, |_, _| normal());
    let random_sigma = (&a * a.transpose()) * 0.25 + DMatrix::identity(4, 4) * 0.5;
    let random_beta = DVector::from_fn(4, |_, _| normal());
    vec![
        CheckPoint { name: "identity", beta: DVector::from_vec(vec![1.0, 0.0]), sigma: DMatrix::identity(2, 2), n: 3 },
        CheckPoint {
            name: "diagonal",
            beta: DVector::from_vec(vec![1.0, 0.0, 1.0]),
            sigma: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])),
            n: 5,
        },
        CheckPoint { name: "random", beta: random_beta, sigma: random_sigma, n: 7 },
    ]
}

pub(crate) fn check_pair(beta: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<()> {
    if sigma.nrows() != beta.len() || sigma.ncols() != beta.len() {
        return Err(Error::Dimension(format!(
            "beta has length {}, Sigma is {}x{}",
            beta.len(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::materialize_covariance;
    use proptest::prelude::*;

    fn diag123() -> (DVector<f64>, CovarianceSpec) {
        (
            DVector::from_vec(vec![1.0, 0.0, 1.0]),
            CovarianceSpec::Known(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]))),
        )
    }

    #[test]
    fn identity_moments() {
        let ms = population_moments(&DVector::from_vec(vec![1.0, 0.0, 1.0]), &CovarianceSpec::Identity, 3).unwrap();
        assert_eq!(ms.m, [1.0; 4]);
        assert_eq!(ms.tau_sq, [2.0; 4]);
        assert_eq!(ms, MomentSet::identity(2.0, 3));
    }

    #[test]
    fn diagonal_moments() {
        let (beta, spec) = diag123();
        let ms = population_moments(&beta, &spec, 3).unwrap();
        assert!((ms.m[1] - 2.0).abs() < 1e-15);
        assert!((ms.m[2] - 14.0 / 3.0).abs() < 1e-14);
        assert!((ms.m[3] - 12.0).abs() < 1e-14);
        assert_eq!(&ms.tau_sq[..], &[2.0, 4.0, 10.0, 28.0]);
    }

    #[test]
    fn ar1_two_by_two() {
        let ms =
            population_moments(&DVector::from_vec(vec![1.0, 1.0]), &CovarianceSpec::Ar1 { alpha: 0.5 }, 2).unwrap();
        assert!((ms.m[1] - 1.0).abs() < 1e-15);
        assert!((ms.m[2] - 1.25).abs() < 1e-15);
        assert!(ms.m[3].is_nan());
    }

    #[test]
    fn ar1_traces_match_dense() {
        for d in [1usize, 2, 7, 50] {
            for alpha in [-0.7, 0.0, 0.5, 0.95] {
                let spec = CovarianceSpec::Ar1 { alpha };
                let beta = DVector::from_fn(d, |i, _| (i as f64 + 1.0).sin());
                let ms = population_moments(&beta, &spec, 3).unwrap();
                let dense =
                    population_moments(&beta, &CovarianceSpec::Known(materialize_covariance(&spec, d).unwrap()), 3)
                        .unwrap();
                for k in 0..4 {
                    assert!((ms.m[k] - dense.m[k]).abs() < 1e-12 * dense.m[k].abs().max(1.0), "d={d} a={alpha} k={k}");
                    assert!((ms.tau_sq[k] - dense.tau_sq[k]).abs() < 1e-12 * dense.tau_sq[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn sample_scaled_matches_dense() {
        let z = DMatrix::from_fn(4, 6, |i, j| ((i * 7 + j * 3) as f64).cos());
        let spec = CovarianceSpec::SampleScaled { z, factor: 0.25 };
        let beta = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let ms = population_moments(&beta, &spec, 3).unwrap();
        let dense =
            population_moments(&beta, &CovarianceSpec::Known(materialize_covariance(&spec, 6).unwrap()), 3).unwrap();
        for k in 0..4 {
            assert!((ms.m[k] - dense.m[k]).abs() < 1e-12 * dense.m[k].abs().max(1.0));
            assert!((ms.tau_sq[k] - dense.tau_sq[k]).abs() < 1e-12 * dense.tau_sq[k].abs().max(1.0));
        }
    }

    #[test]
    fn bad_inputs() {
        let (beta, _) = diag123();
        assert!(matches!(
            population_moments(&beta, &CovarianceSpec::Known(DMatrix::identity(2, 2)), 2),
            Err(Error::Dimension(_))
        ));
        assert!(population_moments(&beta, &CovarianceSpec::Identity, 4).is_err());
        let ms = population_moments(&beta, &CovarianceSpec::Identity, 1).unwrap();
        assert!(matches!(closed_form_moment(MomentId::BW3B, &ms, 3), Err(Error::Domain(_))));
        assert!(closed_form_moment(MomentId::BWB, &ms, 3).is_ok());
    }

    #[test]
    fn closed_form_examples() {
        let (beta, spec) = diag123();
        let ms = population_moments(&beta, &spec, 3).unwrap();
        assert_eq!(closed_form_moment(MomentId::BW2B, &ms, 5).unwrap(), 420.0);
        let unit = MomentSet::identity(1.0, 4);
        assert_eq!(closed_form_moment(MomentId::BWB, &unit, 9).unwrap(), 9.0);
        let two = MomentSet::identity(1.0, 2);
        assert_eq!(closed_form_moment(MomentId::TrW2, &two, 3).unwrap(), 36.0);
        assert_eq!(closed_form_moment(MomentId::TrW, &two, 3).unwrap(), 6.0);
    }

    /// With d = 1, W = Σ·χ²_n and every functional is a chi-square moment.
    #[test]
    fn scalar_case_is_chi_square() {
        let (s, b2, n) = (1.7f64, 0.6f64, 6.0f64);
        let ms = population_moments(
            &DVector::from_element(1, b2.sqrt()),
            &CovarianceSpec::Known(DMatrix::from_element(1, 1, s)),
            3,
        )
        .unwrap();
        let chi = [1.0, n, n * (n + 2.0), n * (n + 2.0) * (n + 4.0), n * (n + 2.0) * (n + 4.0) * (n + 6.0)];
        let expected = [
            (MomentId::TrW, s * chi[1]),
            (MomentId::TrWSqOfSum, s * s * chi[2]),
            (MomentId::TrW2, s * s * chi[2]),
            (MomentId::BWB, b2 * s * chi[1]),
            (MomentId::BW2B, b2 * s * s * chi[2]),
            (MomentId::TrWBWB, b2 * s * s * chi[2]),
            (MomentId::TrWBW2B, b2 * s.powi(3) * chi[3]),
            (MomentId::BWBBW2B, b2 * b2 * s.powi(3) * chi[3]),
            (MomentId::BW3B, b2 * s.powi(3) * chi[3]),
            (MomentId::BW2BSq, b2 * b2 * s.powi(4) * chi[4]),
        ];
        for (id, v) in expected {
            let got = closed_form_moment(id, &ms, 6).unwrap();
            assert!((got - v).abs() < 1e-12 * v, "{id}: {got} vs {v}");
        }
    }

    #[test]
    fn check_points_are_stable() {
        let pts = check_points();
        assert_eq!(pts.iter().map(|p| p.name).collect::<Vec<_>>(), ["identity", "diagonal", "random"]);
        assert_eq!(pts, check_points());
        assert!(pts[2].sigma.clone().cholesky().is_some());
        assert_eq!(closed_form_moment(MomentId::TrW, &pts[0].moments(), pts[0].n).unwrap(), 6.0);
    }

    #[test]
    fn ids_round_trip() {
        for id in MomentId::ALL {
            assert_eq!(id.as_str().parse::<MomentId>().unwrap(), id);
            assert_eq!(id.to_string(), id.as_str());
        }
        assert!("trW3".parse::<MomentId>().is_err());
    }

    proptest! {
        #[test]
        fn identity_collapse(d in 1usize..8, n in 1usize..20, b in proptest::collection::vec(-2.0f64..2.0, 8)) {
            let beta = DVector::from_iterator(d, b.into_iter().take(d));
            let ms = population_moments(&beta, &CovarianceSpec::Identity, 3).unwrap();
            for k in 0..4 {
                prop_assert_eq!(ms.m[k], 1.0);
                prop_assert!((ms.tau_sq[k] - ms.tau_sq[0]).abs() <= 1e-15 * ms.tau_sq[0].max(1.0));
            }
            let t = ms.tau_sq[0];
            let (nf, df) = (n as f64, d as f64);
            let v = closed_form_moment(MomentId::BW2B, &ms, n).unwrap();
            prop_assert!((v - (df * nf + nf * (nf + 1.0)) * t).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
