//! Test-only oracles: independently written reference math the production
//! kernels are checked against, plus monolithic per-pixel renderers that
//! bypass the micro-operator graph entirely.
//!
//! Everything here favors obviousness over speed. Where the production code
//! and an oracle must agree bit-for-bit (sort stability, GEMM accumulation
//! order) the contract is stated at the oracle.

pub mod monolithic;
pub mod oracles;
pub mod suites;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used by randomized suites; seeded per case for reproducible
/// failures.
pub fn case_rng(suite: &str, case: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let tag = suite.as_bytes();
    for (i, slot) in key.iter_mut().enumerate() {
        *slot = tag.get(i % tag.len().max(1)).copied().unwrap_or(0) ^ (case >> (8 * (i % 8))) as u8;
    }
    ChaCha8Rng::from_seed(key)
}
