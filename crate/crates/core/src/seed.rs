//! Stable seed derivation.
//!
//! Every random stream in a study is derived from the base seed through
//! labelled splits, so results never depend on thread scheduling or on how
//! many other streams were created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every simulation stream.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and a textual label.
pub fn derive(parent: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the parent.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(splitmix64(parent) ^ h)
}

/// Derive a child seed from `parent`, a label and an index.
pub fn derive_indexed(parent: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(parent, label) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
