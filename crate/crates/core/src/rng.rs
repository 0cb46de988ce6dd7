//! Seed derivation. Every random stream in the crate is a ChaCha8 generator keyed
//! by `(master seed, purpose label, index)`, so results never depend on the order
//! in which work items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a 64-bit seed from a master seed, a purpose label and an index.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label bytes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let a = mix(master.wrapping_add(GOLDEN));
    let b = mix(a ^ h.wrapping_add(GOLDEN.rotate_left(17)));
    mix(b ^ index
        .wrapping_mul(GOLDEN)
        .wrapping_add(0x632b_e59b_d9b4_e019))
}

/// A generator for the stream identified by `(master, label, index)`.
pub fn stream(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, index))
}
