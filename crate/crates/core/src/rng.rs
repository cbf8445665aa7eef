//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every random quantity in a simulation is drawn from a stream whose seed is
//! a pure function of a root seed and a path of integer tags (patient id,
//! purpose, step index, ...). Streams never depend on scheduling, so a run
//! with one worker and a run with many produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Stream purposes. The numeric values are part of the reproducibility
/// contract: changing them changes every simulated trajectory.
pub mod tag {
    pub const PATIENT: u64 = 0x5041_5449;
    pub const TRUTH: u64 = 1;
    pub const SCHEDULE: u64 = 2;
    pub const BASELINE_NOISE: u64 = 3;
    pub const FIXED_A_NOISE: u64 = 4;
    pub const ADAPTIVE_NOISE: u64 = 5;
    pub const PAIN: u64 = 6;
    pub const ADHERENCE: u64 = 7;
    pub const AGENT: u64 = 8;
    pub const SAMPLER: u64 = 9;
    pub const PREDICTIVE: u64 = 10;
    pub const SELECT: u64 = 11;
    pub const CHAIN: u64 = 12;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a path of tags.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &t| {
        mix64(acc ^ mix64(t.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

/// Generator for the stream at `path` below `parent`.
pub fn stream(parent: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(parent, path))
}

/// Seed of the patient with the given id under `root_seed`.
pub fn patient_seed(root_seed: u64, patient_id: u64) -> u64 {
    derive_seed(root_seed, &[tag::PATIENT, patient_id])
}
