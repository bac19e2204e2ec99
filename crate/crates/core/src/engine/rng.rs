//! Random streams.
//!
//! Every run draws from ChaCha8 (`rand_chacha::ChaCha8Rng`), a counter-based
//! generator keyed by the 64-bit run seed. Independent purposes within one
//! run use distinct stream ids of the same key, so a run is reproducible
//! bit for bit and seeds can be fanned out to workers in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used to sample initial configurations.
pub const INITIAL_STREAM: u64 = 0;
/// Stream driving the dynamics of a single process.
pub const DYNAMICS_STREAM: u64 = 1;
/// Stream driving a coupled pair of processes.
pub const COUPLING_STREAM: u64 = 2;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
