//! Seed derivation and per-item random streams.
//!
//! Every random object in this crate is derived from a 64-bit seed and an
//! item index through [`mix`], so generation never depends on the order in
//! which items are visited. That is what lets edge generation and Monte Carlo
//! trials run in parallel while staying bit-for-bit reproducible.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 finalizer (Stafford variant 13).
///
/// ```text
/// z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
/// z = (z ^ (z >> 27)) * 0x94d049bb133111eb
/// z =  z ^ (z >> 31)
/// ```
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child value from `(base, index)`:
/// `finalize(base + (index + 1) * 0x9e3779b97f4a7c15)`.
///
/// This is one SplitMix64 step taken `index + 1` positions into the stream
/// seeded by `base`, so distinct indices give decorrelated outputs.
#[inline]
pub fn mix(base: u64, index: u64) -> u64 {
    finalize(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Random stream for item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(mix(seed, index))
}
