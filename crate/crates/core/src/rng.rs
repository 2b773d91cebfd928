//! Seeded random-number streams.
//!
//! Every randomized operation takes one explicit 64-bit seed and derives the
//! streams it needs from it. ChaCha8 is used throughout: its output for a
//! given (seed, stream) pair is specified by the cipher itself, so the same
//! seed produces the same bytes on every platform and every run of the same
//! build.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for stream index `stream` under `seed`.
///
/// Substreams let per-class or per-member randomness stay independent of how
/// many draws sibling streams consume.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
