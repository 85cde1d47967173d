//! Seeded random streams.
//!
//! Every randomized operation draws from its own ChaCha stream keyed by the
//! run seed, so fold assignment, label masking and tree growth never share
//! state and stay independent of the order in which they run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Folds = 1,
    LabelMask = 2,
    Forest = 3,
    GridSearch = 4,
    Holdout = 5,
    Synthetic = 6,
    FoldSeed = 7,
}

/// Generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    substream(seed, stream, 0)
}

/// Generator for the `index`-th member of a family of streams (one per tree,
/// one per fold, ...).
pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | index);
    rng
}

/// Derives a child seed; used to hand each CV fold its own seed.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, stream, index).next_u64()
}
