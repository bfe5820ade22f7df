//! Seeded random streams.
//!
//! A stream is identified by `(seed, stream_id)` and backed by ChaCha8 with the
//! stream id mapped onto ChaCha's 64-bit stream selector, so independent streams
//! never share key-stream blocks. Work that fans out across threads derives one
//! stream per unit of work, which keeps results independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed used by the command line tools when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A stream whose id is a hash of `path`, e.g. `[epoch, batch, image]`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let mut id = 0x6a09_e667_f3bc_c908u64;
        for &part in path {
            id = splitmix64(id ^ splitmix64(part));
        }
        Self::new(seed, id)
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// The SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
