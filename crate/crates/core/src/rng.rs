// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic seed derivation.
//!
//! Every stochastic component draws from its own `ChaCha8Rng` whose seed is
//! derived from a master seed, a stream tag and an index. Parallel and serial
//! schedules therefore consume identical random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Derives a child seed for `(tag, index)` from `seed`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    mix64(mix64(seed ^ tag_hash(tag)).wrapping_add(mix64(index)))
}

pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}
