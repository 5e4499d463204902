//! Seed fan-out.
//!
//! A run is driven by one global `u64` seed. Every generated case draws from
//! its own ChaCha20 stream: the key is expanded from the global seed and the
//! stream id is the case's position in the case list. Appending cases leaves
//! the draws of earlier cases untouched, and cases can be generated in any
//! order (or in parallel) with identical results.
//!
//! Experiments that build several independent datasets from one seed (one per
//! detection loss level, for instance) derive a child seed per dataset with
//! [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Random stream for case number `case_index` under `seed`.
pub fn case_rng(seed: u64, case_index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(case_index as u64);
    rng
}

/// Child seed number `index` of `seed` (splitmix64 finalizer over the pair).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
