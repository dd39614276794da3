//! Reproducible random streams.
//!
//! Every stochastic routine takes a 64-bit seed and draws from ChaCha8 keyed by
//! that seed. Independent work items (replications, vertices of a parallel
//! sweep) use distinct ChaCha stream indices, so the output of a replication
//! depends only on `(seed, stream)` and never on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for stream `stream` of the family keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream 0 of `seed`; what single-shot generators use.
pub fn from_seed(seed: u64) -> StreamRng {
    stream(seed, 0)
}
