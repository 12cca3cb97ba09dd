//! Deterministic random-number streams.
//!
//! All randomness flows through ChaCha8, a counter-based generator whose
//! stream id splits one seed into independent substreams. Experiments derive
//! one substream per (purpose, replication) pair, so replications can run on
//! any number of threads and still reproduce bit-identically.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Kept small and stable: changing these renumbers every
/// derived stream and breaks reproducibility of stored outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    // Slot 0 anchors the numbering; only tests draw from it directly.
    #[allow(dead_code)]
    Generic = 0,
    GroundTruth = 1,
    Train = 2,
    Test = 3,
    ShiftTruth = 4,
}

/// Substream for `(seed, purpose, index)`. Index must fit in 40 bits, which
/// leaves room for (replication, grid point) packings well beyond any
/// realistic sweep.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    assert!(index < (1 << 40), "substream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | index);
    rng
}

/// The plain stream for an operation that takes a bare seed. Production
/// paths always name a purpose; module tests draw from the plain stream.
#[allow(dead_code)]
pub fn root(seed: u64) -> ChaCha8Rng {
    substream(seed, Purpose::Generic, 0)
}
