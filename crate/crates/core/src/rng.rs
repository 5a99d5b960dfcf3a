//! Deterministic seed derivation.
//!
//! All stochastic components (synthetic market days, placebo trials,
//! direction randomisations) draw from their own `ChaCha8Rng` seeded through
//! [`child_seed`], so results are independent of execution order and thread
//! count: trial `i` sees the same stream whether it runs first, last, or on
//! another worker.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer — a well-mixed 64-bit permutation used to derive
/// statistically independent child seeds from `(seed, index)` pairs.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the seed for child stream `index` of `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// RNG for child stream `index` of `seed`.
pub fn child_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(seed, index))
}
