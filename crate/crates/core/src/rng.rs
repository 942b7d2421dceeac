//! Seed derivation.
//!
//! All randomness flows from a caller-supplied root seed through
//! counter-based derivation: one ChaCha stream per (purpose, task)
//! pair. There is no global RNG state, so runs are reproducible no
//! matter how work is scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    ChainDraw = 1,
    TannerDraw = 2,
    RhoSample = 3,
    AlphaTrial = 4,
    LambdaProbe = 5,
    WordDraw = 6,
    Corruption = 7,
}

// splitmix64 step; mixes the purpose tag into the root seed.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for task number `task` of the given purpose.
pub fn task_rng(root_seed: u64, purpose: Purpose, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(root_seed, purpose as u64));
    rng.set_stream(task);
    rng
}
