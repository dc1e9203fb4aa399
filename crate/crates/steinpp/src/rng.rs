//! Reproducible random number streams.
//!
//! Every Monte Carlo loop in this crate draws one counter-based stream per
//! (seed, replicate) pair, so replicate `i` sees the same randomness whether
//! the loop runs sequentially, in parallel, or is restarted in the middle.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Stream for a single (seed, replicate) pair.
///
/// Replicate streams with the same seed are statistically independent and
/// order-independent: they are distinct counter streams of one ChaCha8
/// keyed by `seed`.
pub fn replicate_stream(seed: u64, replicate: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Stream for a one-shot draw that is not part of a replicate loop.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a sub-seed for a named stage of a pipeline, so different stages
/// of one experiment never share a stream.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    // FNV-1a over the stage name, folded into the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}
