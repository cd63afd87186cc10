//! Reproducible random streams.
//!
//! A batch is driven by one 64-bit master seed; item `k` of the batch draws
//! from ChaCha stream `k` under that seed, so its numbers do not depend on
//! which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
