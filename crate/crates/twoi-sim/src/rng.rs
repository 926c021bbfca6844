//! Counter-based random number streams.
//!
//! Every trajectory (or pair) derives its own ChaCha stream from the run
//! seed and its global index, so ensembles are reproducible independent of
//! worker count, scheduling, and batch boundaries.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for the `index`-th work item of a run.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
