//! Seeded randomness.
//!
//! Every stochastic step in the crate draws from a xoshiro256++ generator
//! seeded explicitly, so identical seeds reproduce identical runs. Independent
//! streams (per iteration, per tree) are derived with [`derive_seed`] rather
//! than by reusing one generator across stages.

use rand::SeedableRng;

pub type SeededRng = rand_xoshiro::Xoshiro256PlusPlus;

/// Build the crate's generator from a 64-bit seed.
pub fn from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Derive a child seed for an independent stream (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
