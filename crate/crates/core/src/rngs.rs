//! Deterministic sub-stream derivation for all randomized components.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose 256-bit
//! key encodes `(seed, domain, a, b)` — e.g. `(seed, TRANSITION, replication,
//! step)`. Streams are therefore independent of scheduling: parallel
//! replications, re-ordered steps or extra draws in one stream can never
//! shift the values of another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tag for bandit transition sampling.
pub const DOMAIN_TRANSITION: u64 = 1;
/// Domain tag for randomized control rounding.
pub const DOMAIN_ROUNDING: u64 = 2;
/// Domain tag for transition-noise statistics.
pub const DOMAIN_NOISE: u64 = 3;

/// Derives the ChaCha8 stream keyed by `(seed, domain, a, b)`.
pub fn substream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
