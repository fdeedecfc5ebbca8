//! Seeded random substreams.
//!
//! Every random draw in a run comes from a ChaCha8 generator keyed by the run
//! seed, with the ChaCha stream id selecting the consumer. Distinct consumers
//! therefore get independent, reproducible streams regardless of the order in
//! which they are drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    /// File contents of a randomly generated library.
    Library,
    /// Placement of one file in one user's cache.
    Placement { user: usize, file: usize },
    /// One batch of random linear-combination coefficients for one block of
    /// one file.
    Rlc { file: usize, block: usize, batch: usize },
}

impl Substream {
    /// Layout: 8-bit tag, then fields packed into the low 56 bits.
    pub fn id(self) -> u64 {
        match self {
            Substream::Library => 1 << 56,
            Substream::Placement { user, file } => {
                assert!(user < 1 << 24 && file < 1 << 32);
                (2 << 56) | ((user as u64) << 32) | file as u64
            }
            Substream::Rlc { file, block, batch } => {
                assert!(file < 1 << 16 && block < 1 << 20 && batch < 1 << 20);
                (3 << 56) | ((file as u64) << 40) | ((block as u64) << 20) | batch as u64
            }
        }
    }
}

pub fn substream(seed: u64, which: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
