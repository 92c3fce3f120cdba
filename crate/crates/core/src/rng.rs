//! Seed derivation and counter-based uniforms.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! base seed mixed with a stream label, so that the output of any operation
//! depends only on its seed and never on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream index.
#[inline]
pub fn mix(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Counter-based uniform in `[0, 1)` keyed by `(seed, a, b)`.
#[inline]
pub fn uniform_at(seed: u64, a: u64, b: u64) -> f64 {
    let bits = mix(mix(seed, a), b);
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn stream(seed: u64, label: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, label))
}

// Stream labels used across modules.
pub(crate) const LATENTS: u64 = 0x4C41_5445;
pub(crate) const EDGES: u64 = 0x4544_4745;
pub(crate) const NOISE: u64 = 0x4E4F_4953;
pub(crate) const FEATURES: u64 = 0x4645_4154;
pub(crate) const REWIRE: u64 = 0x5245_5749;
pub(crate) const ORIGINS: u64 = 0x4F52_4947;
pub(crate) const SHUFFLE: u64 = 0x5348_5546;
