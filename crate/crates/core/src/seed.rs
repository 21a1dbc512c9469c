//! Seed derivation.
//!
//! Every stochastic consumer draws from its own stream, seeded with
//! `derive_seed(master, purpose, index)`:
//!
//! ```text
//! h   = FNV-1a-64(purpose)
//! out = splitmix64(splitmix64(master ^ h) ^ index)
//! ```
//!
//! Streams for different trial indices are independent of each other, so
//! adding trials never changes the streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, purpose: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(purpose)) ^ index)
}

pub fn rng_for(master: u64, purpose: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, purpose, index))
}
