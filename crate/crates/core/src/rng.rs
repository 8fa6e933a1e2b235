//! Seeded random streams.
//!
//! Every stochastic step takes a `u64` seed and a fixed stream tag, so two
//! components seeded from the same value never share a random sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod stream {
    pub const CENTERS: u64 = 1;
    pub const FOLDS: u64 = 2;
    pub const WF_CENTERS: u64 = 3;
    pub const WF_FOLDS: u64 = 4;
    pub const SIGNAL: u64 = 5;
    pub const NOISE: u64 = 6;
    pub const NGIF_INIT: u64 = 7;
    pub const AUGMENT: u64 = 8;
    pub const SUBSAMPLE: u64 = 9;
}

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes two integers into a new seed (splitmix64 finalizer).
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
