//! Seed derivation for independent, reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-stream `index` of `lane` under `base`.
pub fn derive_seed(base: u64, lane: u64, index: u64) -> u64 {
    mix(mix(mix(base) ^ lane) ^ index)
}

pub fn stream(base: u64, lane: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, lane, index))
}

/// Lanes keep the epidemic and the tester's randomness apart, so strategies
/// run on the same seed see the same epidemic.
pub mod lane {
    pub const WORLD: u64 = 1;
    pub const DESIGN: u64 = 2;
    pub const ORACLE: u64 = 3;
}
