//! Seed derivation.
//!
//! All randomness in the crate comes from ChaCha8 generators. Independent
//! sub-streams (per round, per experiment stage) are obtained by selecting a
//! ChaCha stream id instead of hashing seeds together, so streams never
//! overlap and the result does not depend on the order in which they are
//! created.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A fresh `u64` seed for sub-stream `stream` of `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}
