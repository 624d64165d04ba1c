//! Seeding utilities.
//!
//! Every random quantity in the crate is derived from explicit `u64` seeds
//! through either a ChaCha stream (learner randomness) or the SplitMix64
//! finalizer (stateless hashing in seeded adversaries). Both are fixed
//! algorithms, so results reproduce bit-for-bit across platforms and
//! releases; `std`'s hashers carry no such guarantee.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based stream cipher RNG used for all learner sampling.
pub type GameRng = ChaCha8Rng;

/// Create the deterministic RNG stream for a given seed.
pub fn seeded_rng(seed: u64) -> GameRng {
    GameRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer: a fixed bijective mixer on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `word` into a running SplitMix64 chain.
pub fn mix(state: u64, word: u64) -> u64 {
    splitmix64(state ^ word)
}

/// Map a hash word to a float uniform over `[0, 1)` using the top 53 bits.
pub fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
