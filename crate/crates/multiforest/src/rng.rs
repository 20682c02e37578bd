//! Named, independent random streams derived from one master seed.
//!
//! Every source of randomness in this crate is a ChaCha8 stream keyed by
//! `(seed, purpose, a, b)`. Streams are independent by construction, so work
//! can be scheduled across any number of workers without changing results:
//! tree `t` always grows from `stream(seed, TreeGrowth, t, 0)` no matter which
//! thread runs it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is for. The discriminant is part of the stream key, so two
/// purposes never share a stream even with equal `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Growing tree `a`: in-bag subsample first, then all split decisions.
    TreeGrowth = 1,
    /// Within-node permutation for node `b` of tree `a` in the node-level
    /// importance measures.
    NodePermutation = 2,
    /// Whole-OOB permutation of covariate `b` for tree `a` in the permutation
    /// importance measure.
    TreePermutation = 3,
    /// Simulated dataset generation.
    Simulation = 4,
    /// Fold assignment for repetition `a` of a cross-validation run.
    CvFolds = 5,
    /// Seed material for subtasks of a simulation study.
    Study = 6,
}

/// The stream keyed by `(seed, purpose, a, b)`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
