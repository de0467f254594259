//! Deterministic random streams.
//!
//! Every stochastic routine takes an explicit generator. Replicates and
//! sub-tasks derive their own streams from `(seed, tag, index)` so results do
//! not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by every simulation in the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed. Distinct `(tag, index)` pairs give unrelated seeds.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)).wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags, kept in one place so that no two consumers collide.
pub mod tags {
    pub const TEACHING_DATA: u64 = 1;
    pub const AUX_DATA: u64 = 2;
    pub const EVAL_DATA: u64 = 3;
    pub const LEARNER: u64 = 4;
    pub const TEACHER: u64 = 5;
    pub const ROLLOUT: u64 = 6;
    pub const TASKS: u64 = 7;
    pub const NET_INIT: u64 = 8;
    pub const MAML: u64 = 9;
    pub const FTML: u64 = 10;
    pub const HELDOUT: u64 = 11;
    pub const TASK_CHOICE: u64 = 12;
    pub const TINY: u64 = 13;
}
