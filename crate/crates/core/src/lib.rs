//! Method-of-moments estimation of the residual variance `σ²`, the signal
//! strength `τ² = βᵀΣβ`, and the signal-to-noise ratio `τ²/σ²` in linear
//! models `y = Xβ + ε` where the number of predictors `d` may exceed `n`.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod model;
pub mod rng;
pub mod simharness;
pub mod stats;
pub mod suffstats;
pub mod uncertainty;
pub mod wishart;

pub use error::{Error, Result};
