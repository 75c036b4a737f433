//! Sufficient statistics `T₁ = n⁻¹‖y‖²`, `T₂ = n⁻²‖Xᵀy‖²` and the
//! spectral-moment estimators `m̂₁`, `m̂₂`.
//!
//! `m̂₁ = d⁻¹ tr(S)` and
//! `m̂₂ = n/(d(n+1)) · tr(S²) − 1/(d(n+1)) · tr(S)²` with `S = n⁻¹XᵀX`
//! are unbiased for `m₁ = d⁻¹tr(Σ)` and `m₂ = d⁻¹tr(Σ²)` under Gaussian rows.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{RegressionSample, Whitener};

/// `T₁`, `T₂` and the dimensions: everything the Σ = I estimators need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticStats {
    pub t1: f64,
    pub t2: f64,
    pub n: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SufficientStats {
    pub t1: f64,
    pub t2: f64,
    pub m1_hat: f64,
    /// Stored as computed; may be tiny or negative when `n ≈ d`.
    pub m2_hat: f64,
    pub n: usize,
    pub d: usize,
}

impl SufficientStats {
    pub fn quadratic(&self) -> QuadraticStats {
        QuadraticStats { t1: self.t1, t2: self.t2, n: self.n, d: self.d }
    }
}

/// Which Gram matrix is formed for `tr{(XᵀX)²}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSide {
    /// `XᵀX`, d × d.
    Columns,
    /// `XXᵀ`, n × n.
    Rows,
}

impl GramSide {
    /// The smaller side; ties use `XᵀX`.
    pub fn cheapest(n: usize, d: usize) -> Self {
        if d <= n {
            GramSide::Columns
        } else {
            GramSide::Rows
        }
    }
}

/// `tr{(XᵀX)²} = ‖G‖²_F` for the Gram matrix `G` on `side`.
pub fn gram_trace_squared(x: &DMatrix<f64>, side: GramSide) -> f64 {
    let gram = match side {
        GramSide::Columns => x.tr_mul(x),
        GramSide::Rows => x * x.transpose(),
    };
    gram.norm_squared()
}

/// `T₁` and `T₂` alone, in O(nd).
pub fn quadratic_stats(sample: &RegressionSample) -> QuadraticStats {
    let n = sample.n();
    let nf = n as f64;
    let xty = sample.x().tr_mul(sample.y());
    QuadraticStats { t1: sample.y().norm_squared() / nf, t2: xty.norm_squared() / (nf * nf), n, d: sample.d() }
}

/// `T₁` and the whitened `T₂ = n⁻²‖(XR)ᵀy‖²` using the quadratic form of the
/// whitener, without forming `XR`.
pub fn whitened_quadratic_stats(sample: &RegressionSample, whitener: &Whitener) -> QuadraticStats {
    let n = sample.n();
    let nf = n as f64;
    let xty: DVector<f64> = sample.x().tr_mul(sample.y());
    QuadraticStats {
        t1: sample.y().norm_squared() / nf,
        t2: whitener.quadratic_form(&xty) / (nf * nf),
        n,
        d: sample.d(),
    }
}

/// `(m̂₁, m̂₂)` for design `x`.
pub fn spectral_moment_estimates(x: &DMatrix<f64>) -> (f64, f64) {
    let (n, d) = x.shape();
    let (nf, df) = (n as f64, d as f64);
    // tr(S) and tr(S²) for S = n⁻¹XᵀX
    let tr_s = x.norm_squared() / nf;
    let tr_s2 = gram_trace_squared(x, GramSide::cheapest(n, d)) / (nf * nf);
    let m1 = tr_s / df;
    let m2 = nf / (df * (nf + 1.0)) * tr_s2 - tr_s * tr_s / (df * (nf + 1.0));
    (m1, m2)
}

pub fn compute_stats(sample: &RegressionSample) -> SufficientStats {
    let q = quadratic_stats(sample);
    let (m1_hat, m2_hat) = spectral_moment_estimates(sample.x());
    SufficientStats { t1: q.t1, t2: q.t2, m1_hat, m2_hat, n: q.n, d: q.d }
}

/// `compute_stats` on `(y, XR)`.
pub fn whitened_stats(sample: &RegressionSample, root: &DMatrix<f64>) -> Result<SufficientStats> {
    let d = sample.d();
    if root.shape() != (d, d) {
        return Err(Error::Dimension(format!(
            "whitening matrix is {}x{}, expected {d}x{d}",
            root.nrows(),
            root.ncols()
        )));
    }
    let whitened = RegressionSample::new(sample.y().clone(), sample.x() * root)?;
    Ok(compute_stats(&whitened))
}
