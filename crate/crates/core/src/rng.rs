//! Seed derivation.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose 64-bit seed is
//! derived from a master seed and a path of labels, e.g.
//! `(master, replicate, WALK)`. The derivation folds each label into the
//! state with the SplitMix64 finalizer, so sibling paths give unrelated
//! seeds and the result does not depend on which thread asks for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Substream labels.
pub mod stream {
    pub const WALK: u64 = 0x5741_4c4b;
    pub const FGN: u64 = 0x4647_4e00;
    pub const BROWNIAN: u64 = 0x4252_574e;
    pub const SCENERY: u64 = 0x5343_454e;
    pub const FBM_POINTS: u64 = 0x4642_4d50;
    pub const ORACLE: u64 = 0x4f52_4143;
    pub const BRIDGE: u64 = 0x4252_4447;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a label path.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &label| splitmix64(acc ^ splitmix64(label)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, path: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(seed, path))
}
