//! Seeded, stream-splittable randomness for the simulator.
//!
//! Every randomized stage pulls an independent ChaCha substream keyed by
//! (frame index, stage), so per-frame work can run on any number of
//! threads and still reproduce bit-identical stacks.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which pipeline stage a substream feeds.
#[derive(Clone, Copy, Debug)]
pub enum Stage {
    Illumination = 0,
    Noise = 1,
    LedShift = 2,
}

/// Master seed with derived substreams.
#[derive(Clone, Copy, Debug)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for (index, stage). Same seed, index and
    /// stage always reproduce the same draws.
    pub fn substream(&self, index: u64, stage: Stage) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((index << 3) | stage as u64);
        rng
    }
}
