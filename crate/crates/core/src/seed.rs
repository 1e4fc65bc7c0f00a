//! Counter-based seed derivation.
//!
//! A root seed expands into independent child seeds by hashing the root
//! together with a stream tag and a tuple of counters. Every episode in an
//! experiment therefore owns a seed that can be recomputed in isolation,
//! without replaying the random stream that preceded it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `root`, a stream tag and an index path.
///
/// `derive_seed(root, "eval", &[model, agent, map, episode])` is stable
/// across runs and platforms.
pub fn derive_seed(root: u64, tag: &str, path: &[u64]) -> u64 {
    let mut h = mix64(root ^ fnv1a(tag.as_bytes()));
    for &p in path {
        h = mix64(h ^ mix64(p));
    }
    h
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(root, tag, path))`.
pub fn derive_rng(root: u64, tag: &str, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(root, tag, path))
}
