//! Deterministic per-replicate random streams.
//!
//! Every replicate derives its own generator from `(seed, replicate, tag)`, so
//! results do not depend on the order in which replicates are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed to every stochastic step of the pipeline.
pub type ReplicateRng = ChaCha8Rng;

/// Identifies which stochastic step within a replicate consumes a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum StreamTag {
    SourceBootstrap = 0,
    TargetBootstrap = 1,
    Shuffle = 2,
    SimulationNoise = 3,
}

impl From<StreamTag> for u8 {
    fn from(tag: StreamTag) -> u8 {
        tag as u8
    }
}

/// Builds the generator for one `(replicate, tag)` pair under a master seed.
///
/// The seed keys the ChaCha cipher; the replicate index and tag select
/// disjoint 64-bit stream ids, so distinct pairs never share keystream.
///
/// Panics if `replicate_index >= 2^56`.
pub fn derive_replicate_rng(
    seed: u64,
    replicate_index: u64,
    stream_tag: impl Into<u8>,
) -> ReplicateRng {
    assert!(replicate_index < (1 << 56), "replicate index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replicate_index << 8) | u64::from(stream_tag.into()));
    rng
}
