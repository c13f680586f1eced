//! Seeding helpers. Every random draw in the crate comes from a ChaCha
//! stream keyed by a 64-bit seed, so runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent seed for block `index` of a run keyed by `master`.
pub fn block_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Derives a seed for a named sub-stream (noise, bits, shuffling, ...).
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Equiprobable information bits.
pub fn random_bits(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = rng_from_seed(seed);
    (0..len).map(|_| rng.random::<bool>() as u8).collect()
}
