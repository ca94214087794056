//! Seeded random streams, one per concern.
//!
//! Each concern (and, for mobility, each host) draws from its own ChaCha
//! stream derived from the run seed, so changing how one concern consumes
//! randomness never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concern {
    Placement = 1,
    Battery = 2,
    Ids = 3,
    Mobility = 4,
}

/// Stream for `concern`, sub-indexed by `index` (host index for per-host
/// streams, 0 otherwise).
pub fn stream(seed: u64, concern: Concern, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((concern as u64) << 32) | u64::from(index));
    rng
}
