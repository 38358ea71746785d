//! Numerical laboratory for parallel repetition of two-player entangled games.
//!
//! Quantum-information primitives ([`qit`]), labeled multi-register pure
//! states ([`multireg`]), games and strategies, the conditioned-state
//! machinery for repeated games ([`repetition`]) and randomized inequality
//! verifiers ([`harness`]).

// Index loops mirror the summation notation of the tensor contractions.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod games;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod multireg;
pub mod qit;
pub mod random;
pub mod repetition;
pub mod strategies;

pub use error::{Error, Result};

/// Deterministic RNG used everywhere a seed is accepted.
pub type SeededRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}

/// Independent per-stream seed; a splitmix64 finalizer over `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
