//! Seed derivation. Every random stream in a dataset is keyed by
//! `(master seed, image index, instance index)` so output never depends on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one instance slot of one image. Stable across runs and platforms.
pub fn derive_instance_seed(master_seed: u64, image_index: u64, instance_index: u64) -> u64 {
    let h = mix64(master_seed.wrapping_add(GOLDEN));
    let h = mix64(h ^ image_index.wrapping_mul(GOLDEN).wrapping_add(0xD1B5_4A32_D192_ED03));
    mix64(h ^ instance_index.wrapping_add(GOLDEN.rotate_left(17)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
