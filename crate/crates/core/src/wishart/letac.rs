use nalgebra::{DMatrix, DVector};

use super::{check_pair, MomentId};
use crate::error::{Error, Result};
use crate::model::SYMMETRY_TOL;

/// Largest number of trace factors accepted by [`letac_moment`].
pub const MAX_LETAC_ORDER: usize = 4;

/// A permutation of `{0, .., k−1}` with its disjoint-cycle decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl Permutation {
    /// `mapping[i]` is the image of `i`.
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let k = mapping.len();
        let mut seen = vec![false; k];
        for &j in &mapping {
            if j >= k || seen[j] {
                return Err(Error::Domain(format!("{mapping:?} is not a permutation")));
            }
            seen[j] = true;
        }
        let mut visited = vec![false; k];
        let mut cycles = Vec::new();
        for start in 0..k {
            if visited[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !visited[i] {
                visited[i] = true;
                cycle.push(i);
                i = mapping[i];
            }
            cycles.push(cycle);
        }
        Ok(Self { mapping, cycles })
    }

    /// All `k!` permutations in lexicographic order.
    pub fn all(k: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..k).collect();
        loop {
            out.push(Permutation::new(current.clone()).expect("valid by construction"));
            // next lexicographic permutation
            let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).expect("exists");
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// `m(π)`.
    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }
}

/// `E Π_i tr(W H_i)` for `W ~ Wishart(n, Σ)`:
/// `Σ_{π ∈ S_k} 2^{k − m(π)} n^{m(π)} Π_cycles tr(Π_{c ∈ cycle} Σ H_c)`.
pub fn letac_moment(sigma: &DMatrix<f64>, hs: &[DMatrix<f64>], n: usize) -> Result<f64> {
    let k = hs.len();
    if k > MAX_LETAC_ORDER {
        return Err(Error::Complexity(k));
    }
    let d = sigma.nrows();
    for h in std::iter::once(sigma).chain(hs) {
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::Dimension(format!("expected {d}x{d}, got {}x{}", h.nrows(), h.ncols())));
        }
        let asym = crate::model::max_asymmetry(h);
        if asym > SYMMETRY_TOL {
            return Err(Error::Symmetry(asym));
        }
    }
    let sh: Vec<DMatrix<f64>> = hs.iter().map(|h| sigma * h).collect();
    let nf = n as f64;
    let mut total = 0.0;
    for perm in Permutation::all(k) {
        let m = perm.cycle_count();
        let mut r = 1.0;
        for cycle in perm.cycles() {
            let mut prod = sh[cycle[0]].clone();
            for &c in &cycle[1..] {
                prod *= &sh[c];
            }
            r *= prod.trace();
        }
        total += 2f64.powi((k - m) as i32) * nf.powi(m as i32) * r;
    }
    Ok(total)
}

/// Orthogonal matrix whose first column is `v/‖v‖` (a Householder
/// reflection of `e₁`).
pub fn rotation_with_first_column(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = v.len();
    let norm = v.norm();
    if !(norm > 0.0) {
        return Err(Error::Domain("vector must be nonzero".into()));
    }
    let mut w = v / norm;
    w[0] -= 1.0;
    let wn = w.norm_squared();
    let mut q = DMatrix::identity(d, d);
    if wn > 1e-30 {
        q -= (&w * w.transpose()) * (2.0 / wn);
    }
    Ok(q)
}

/// `(u_i u_jᵀ + u_j u_iᵀ)/2`.
fn sym_outer(q: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
    let (a, b) = (q.column(i), q.column(j));
    (a * b.transpose() + b * a.transpose()) * 0.5
}

/// `E f(W)` for a [`MomentId`] rebuilt from [`letac_moment`] terms.
///
/// With an orthonormal basis `u₁ = β/‖β‖, u₂, ..` and
/// `H_ij = (u_i u_jᵀ + u_j u_iᵀ)/2`, `tr(W H_ij) = u_iᵀ W u_j`, so e.g.
/// `βᵀW²β = ‖β‖² Σ_j tr(W H_1j)²` and
/// `βᵀW³β = ‖β‖² Σ_{j,l} tr(W H_1j) tr(W H_jl) tr(W H_l1)`.
pub fn letac_reconstruction(which: MomentId, beta: &DVector<f64>, sigma: &DMatrix<f64>, n: usize) -> Result<f64> {
    check_pair(beta, sigma)?;
    let d = beta.len();
    let eye = DMatrix::<f64>::identity(d, d);
    let t0 = beta.norm_squared();
    let needs_beta = !matches!(which, MomentId::TrW | MomentId::TrWSqOfSum | MomentId::TrW2);
    if needs_beta && t0 == 0.0 {
        return Ok(0.0);
    }
    let q = if needs_beta { rotation_with_first_column(beta)? } else { eye.clone() };
    let h = |i: usize, j: usize| sym_outer(&q, i, j);
    let e = |hs: &[DMatrix<f64>]| letac_moment(sigma, hs, n);
    let sum_j = |f: &dyn Fn(usize) -> Result<f64>| -> Result<f64> { (0..d).map(f).sum() };
    Ok(match which {
        MomentId::TrW => e(&[eye])?,
        MomentId::TrWSqOfSum => e(&[eye.clone(), eye])?,
        MomentId::TrW2 => {
            let mut total = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let hij = h(i, j);
                    total += e(&[hij.clone(), hij])?;
                }
            }
            total
        }
        MomentId::BWB => t0 * e(&[h(0, 0)])?,
        MomentId::BW2B => t0 * sum_j(&|j| e(&[h(0, j), h(0, j)]))?,
        MomentId::TrWBWB => t0 * e(&[eye, h(0, 0)])?,
        MomentId::TrWBW2B => t0 * sum_j(&|j| e(&[eye.clone(), h(0, j), h(0, j)]))?,
        MomentId::BWBBW2B => t0 * t0 * sum_j(&|j| e(&[h(0, 0), h(0, j), h(0, j)]))?,
        MomentId::BW3B => t0 * sum_j(&|j| sum_j(&|l| e(&[h(0, j), h(j, l), h(l, 0)])))?,
        MomentId::BW2BSq => t0 * t0 * sum_j(&|j| sum_j(&|l| e(&[h(0, j), h(0, j), h(0, l), h(0, l)])))?,
    })
}
