//! Counter-based random substreams.
//!
//! Every stochastic quantity is drawn from a ChaCha stream keyed by a
//! master seed and a path of integer labels (role, trial index, slot, ...),
//! so a trial's randomness does not depend on the order in which trials
//! are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Codebook = 1,
    Message = 2,
    BobChannel = 3,
    WillieChannel = 4,
    Detection = 5,
    Divergence = 6,
    Experiment = 7,
    Grid = 8,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a label.
pub fn derive(seed: u64, label: u64) -> u64 {
    splitmix(splitmix(seed) ^ label.wrapping_mul(GOLDEN).rotate_left(17))
}

/// Derives a child seed from a role and a trial index.
pub fn trial_seed(seed: u64, role: Role, trial: u64) -> u64 {
    derive(derive(seed, role as u64), trial)
}

/// Generator for stream `index` of `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
