//! Seed derivation.
//!
//! Every random stream is derived from one 64-bit master seed, a constant
//! naming the purpose of the stream, and a stream index (repetition, cell,
//! restart). The master seed is mixed before the XOR so that neighbouring
//! masters do not share streams at shifted indices; the final mix is a
//! bijection, so distinct `mix(master) ^ purpose ^ index` values never
//! collide.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose constants for derived streams.
pub mod purpose {
    pub const ADJACENCY: u64 = 0x4144_4a41_4345_4e43;
    pub const COLUMN_LABELS: u64 = 0x4c41_4245_4c53_0000;
    pub const COLUMN_DEGREES: u64 = 0x5448_4554_4143_0000;
    pub const ROW_DEGREES: u64 = 0x5448_4554_4152_0000;
    pub const KMEANS: u64 = 0x4b4d_4541_4e53_0000;
    pub const KMEANS_RESTART: u64 = 0x5245_5354_4152_5400;
    pub const FIT: u64 = 0x4649_5400_0000_0000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed for `purpose` and `index` from `master`.
pub fn derive(master: u64, purpose: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ purpose ^ index)
}

/// Pack a (cell, repetition) pair into one stream index.
pub fn cell_rep_index(cell: usize, rep: usize) -> u64 {
    ((cell as u64) << 32) | (rep as u64 & 0xffff_ffff)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
