//! Deterministic seeding and hashing helpers.
//!
//! All randomness in this crate derives from explicit 64-bit seeds through
//! these functions. Std's `DefaultHasher` is not stable across releases, so
//! fingerprints and seed derivation use FNV-1a and splitmix64 instead.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; bijective mixing of a 64-bit value.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fold several 64-bit parts into one well-mixed value.
pub fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x51_7c_c1_b7_27_22_0a_95;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// Derive a child seed from a parent seed and a textual label.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    mix(&[seed, fnv1a(label.as_bytes())])
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Map a u64 to the open unit interval (0, 1); never returns 0.0 or 1.0.
pub fn unit_open(x: u64) -> f64 {
    // 52 significant bits: (k + 0.5) * 2^-52 is exact for every k < 2^52,
    // so the result stays strictly below 1.
    ((x >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}
