//! Seed threading.
//!
//! A single master seed fans out into independent streams keyed by a module
//! tag and an index, so that per-draw simulations can run in any order (or in
//! parallel) and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream used everywhere in the crate.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derives a child seed from `(master, tag, index)`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let a = splitmix64(master ^ fnv1a(tag));
    splitmix64(a ^ splitmix64(index))
}

/// A fresh stream for `(master, tag, index)`.
pub fn stream(master: u64, tag: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(master, tag, index))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
