//! Seed handling.
//!
//! Every random draw in the crate comes from a ChaCha20 stream
//! ([`rand_chacha::ChaCha20Rng`]) seeded with a 64-bit value. Sub-seeds for
//! independent trials and records are derived from a master seed with
//! [`derive`], which folds each stream index into the seed through the
//! splitmix64 finalizer. The mapping is fixed, so a `(seed, path)` pair names
//! the same stream across builds and platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `master` and a path of stream indices.
///
/// `derive(s, &[a, b])` equals `derive(derive(s, &[a]), &[b])`.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |acc, &idx| {
        mix64(acc.wrapping_add(GOLDEN).wrapping_add(mix64(idx.wrapping_add(GOLDEN))))
    })
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
