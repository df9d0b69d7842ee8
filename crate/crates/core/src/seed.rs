//! Seed derivation.
//!
//! Every random stream in the crate is keyed by a master seed plus a path of
//! integer tags (driver, trial index, cell coordinates, ...). Keys are mixed
//! with the SplitMix64 finalizer, so streams for distinct paths are
//! effectively independent and the whole computation replays from one `u64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::SplitMix64;

use crate::lattice::Point;

pub type TrialRng = ChaCha8Rng;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of tags.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for &t in tags {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix64(t));
    }
    h
}

/// Seed for a lattice site under `seed`.
pub fn derive_point(seed: u64, p: &Point) -> u64 {
    let mut h = mix64(seed ^ 0x6a09_e667_f3bc_c909 ^ p.dim() as u64);
    for c in p.coords() {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ (c as u64));
    }
    h
}

/// Main stream for a trial or a sampler.
pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lightweight per-cell stream.
pub fn cell_rng(seed: u64, center: &Point) -> SplitMix64 {
    SplitMix64::seed_from_u64(derive_point(seed, center))
}

/// Stable tags for the different random ingredients of an experiment.
pub mod tag {
    pub const LAMBDA: u64 = 0x4c41_4d42;
    pub const PHI: u64 = 0x5048_4931;
    pub const FOREST: u64 = 0x464f_5253;
    pub const SECOND_FOREST: u64 = 0x464f_5232;
    pub const TRIAL: u64 = 0x5452_4941;
    pub const COUPLING: u64 = 0x434f_5550;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const THIN: u64 = 0x5448_494e;
}
