//! Deterministic seed derivation for replica sweeps.
//!
//! A master seed plus a replica index is mapped to an independent per-replica
//! seed through one splitmix64 step. Replica `i` always gets the same seed no
//! matter how many replicas run or on how many threads, so growing a sweep
//! never perturbs earlier replicas.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer applied to `master + (index + 1) * GAMMA`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream RNG used everywhere a seed is consumed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
