//! Deterministic seed derivation for independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Keeping them distinct guarantees, for instance, that the
/// number of training episodes cannot shift the test-episode seeds.
pub mod stream {
    pub const RUN: u64 = 0x5255_4e00;
    pub const EVOLUTION: u64 = 0x4556_4f00;
    pub const EVALUATION: u64 = 0x4556_4100;
    pub const TEST: u64 = 0x5445_5354;
    pub const VALIDATION: u64 = 0x5641_4c00;
    pub const NOISE: u64 = 0x4e4f_4953;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream tag and an index.
pub fn derive(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(stream)) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(base: u64, stream: u64, index: u64) -> ChaCha8Rng {
    rng(derive(base, stream, index))
}
