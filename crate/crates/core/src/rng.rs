//! Counter-style random streams.
//!
//! Every random draw in the crate is addressed by a `(seed, index)` pair so
//! results never depend on iteration order or thread count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for the independent stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A child seed for stream `index`, used to build nested streams
/// (epoch -> edge, Monte Carlo sample -> edge).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream(seed, index).next_u64()
}

/// First uniform draw in `[0, 1)` of stream `index`.
pub fn uniform(seed: u64, index: u64) -> f64 {
    stream(seed, index).random::<f64>()
}
