//! Deterministic seed derivation.
//!
//! Every random decision in a run (weight init, shuffles, synthetic data,
//! Monte-Carlo trials) draws from a ChaCha stream derived from one master
//! seed and a string tag, so sub-streams are decorrelated and any component
//! can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a master seed and a stream tag.
pub fn derive(master: u64, tag: &str) -> u64 {
    let mut h = mix(master ^ 0x5313_4e61_6d65_5f21);
    for &b in tag.as_bytes() {
        h = mix(h ^ u64::from(b));
    }
    h
}

/// Seeded RNG for the stream `(master, tag)`.
pub fn stream(master: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tag))
}

/// Seeded RNG for the stream `(master, tag, index)`; used where a tagged
/// stream is consumed once per floor, epoch, or trial.
pub fn stream_indexed(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(derive(master, tag) ^ mix(index)))
}
