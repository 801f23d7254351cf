//! Seedable random source.
//!
//! Every stochastic decision in the optimizer goes through a [`RandomSource`]:
//! standard Gaussian draws (subset sizes, baseline pre-images), Rademacher
//! sign vectors (LM-CMA pre-images) and uniform draws (initial means).
//!
//! The generator is ChaCha8 keyed by the 64-bit seed, so a given seed yields
//! the same stream on every platform, and the full generator state
//! (key, stream id, word position) serializes into checkpoints.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream derived from the same seed.
    ///
    /// Stream 0 is the one returned by [`RandomSource::new`]; sub-stream `i`
    /// uses ChaCha stream id `i + 1`, so workers never overlap with the parent.
    pub fn substream(&self, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index.wrapping_add(1));
        Self {
            seed: self.seed,
            rng,
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lower: f64, upper: f64) -> f64 {
        lower + (upper - lower) * self.rng.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Fills `out` with independent fair signs, 64 components per generator word
    /// (least significant bit first; a set bit means `+1`).
    pub fn fill_rademacher(&mut self, out: &mut [i8]) {
        for chunk in out.chunks_mut(64) {
            let mut bits = self.rng.next_u64();
            for s in chunk {
                *s = if bits & 1 == 1 { 1 } else { -1 };
                bits >>= 1;
            }
        }
    }

    pub fn rademacher_vector(&mut self, n: usize) -> Vec<i8> {
        let mut out = vec![0i8; n];
        self.fill_rademacher(&mut out);
        out
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.gaussian();
        }
    }
}
