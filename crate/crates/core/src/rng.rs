//! Seeded random number streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by
//! the master seed. Independent consumers (the β draw, the design of replicate
//! `r`, the noise of replicate `r`, ...) use distinct 64-bit stream ids of the
//! same key, so results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// What a stream is used for. Occupies the low bits of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Design = 0,
    Noise = 1,
    Beta = 2,
    Covariance = 3,
    Oracle = 4,
}

const PURPOSE_BITS: u32 = 3;

/// Generator for `(master_seed, index, purpose)`.
pub fn substream(master_seed: u64, index: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream((index << PURPOSE_BITS) | purpose as u64);
    rng
}
