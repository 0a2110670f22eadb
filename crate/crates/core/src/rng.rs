//! Seed derivation and the generator used by every stochastic component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator shared by simulations, sampling, and generators.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stable per-trial seed: a SplitMix64 finalizer over the master seed and
/// the trial index. Independent of how trials are scheduled.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(
        trial_index
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
