//! Seed derivation and random streams.
//!
//! Every random stream in a run is a ChaCha8 generator seeded from a 64-bit
//! value derived from `(master_seed, trial, node)` by chained splitmix64
//! finalizers:
//!
//! ```text
//! s0 = mix(master_seed)
//! s1 = mix(s0 ^ trial)
//! s2 = mix(s1 ^ node)
//! ```
//!
//! where `mix(z)` adds the golden-ratio increment `0x9E3779B97F4A7C15` and
//! applies the standard splitmix64 avalanche. Node 0 of a trial is the stream
//! consumed by single-node SGD and SVRG; DSGD node `i` uses node `i`, so a
//! one-node DSGD run consumes exactly the SGD stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Reserved node index for the synthetic bias generator.
pub const BIAS_NODE: u64 = u64::MAX - 1;
/// Reserved node index for dataset draws.
pub const DATA_NODE: u64 = u64::MAX - 2;
/// Reserved node index for the harness itself.
pub const HARNESS_NODE: u64 = u64::MAX;

pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master_seed: u64, trial: u64, node: u64) -> u64 {
    let s0 = splitmix64(master_seed);
    let s1 = splitmix64(s0 ^ trial);
    splitmix64(s1 ^ node)
}

pub fn stream(master_seed: u64, trial: u64, node: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master_seed, trial, node))
}

pub fn from_seed(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}
