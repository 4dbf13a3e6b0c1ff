//! Deterministic RNG stream derivation.
//!
//! Every random draw in the library comes from a [`ChaCha8Rng`] derived from
//! the master seed plus an integer path such as `(purpose, sequence, train)`.
//! Work units can then run in any order, on any number of threads, and still
//! consume exactly the same random numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer; bijective on u64, so absorbing distinct path
/// elements from the same state yields distinct states.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent RNG stream from `master_seed` and an integer path.
///
/// Paths of the same length with any differing element produce different
/// streams; all experiment code uses fixed-shape paths per purpose.
pub fn derive_rng(master_seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = mix(master_seed ^ GOLDEN);
    for &part in path {
        state = mix(state ^ part.wrapping_add(GOLDEN));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Stream purpose tags; first element of every derivation path.
pub mod purpose {
    pub const TRAJ_PRE: u64 = 1;
    pub const TRAJ_POST: u64 = 2;
    pub const TRAIN_PRE: u64 = 3;
    pub const TRAIN_POST: u64 = 4;
    pub const DYN_PRE: u64 = 5;
    pub const DYN_DRIVE: u64 = 6;
    pub const TRACE_TRAJ_PRE: u64 = 7;
    pub const TRACE_TRAJ_POST: u64 = 8;
    pub const TRACE_TRAIN_PRE: u64 = 9;
}
