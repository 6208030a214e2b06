//! Stable seed derivation.
//!
//! Every independent unit of work (a family, a replication, a fold) gets its
//! own generator seeded from `derive_seed(parent, index)`, so results do not
//! depend on the order in which the units are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Mixes a parent seed and an index into a child seed (splitmix64 finalizer).
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(parent, index))`.
pub fn child_rng(parent: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(parent, index))
}
