//! Seed-stable random streams.
//!
//! Every sampling operation takes an explicit `(seed, domain, index)` triple
//! and derives an independent ChaCha stream from it, so batches can be
//! partitioned across workers without changing the drawn numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives the RNG for item `index` of logical domain `domain` under `seed`.
///
/// Streams are distinct as long as `index < 2^48`, far beyond any batch size
/// used here.
pub fn stream_rng(seed: u64, domain: u16, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 48) | index);
    rng
}
