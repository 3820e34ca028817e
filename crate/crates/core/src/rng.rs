//! Random variates and trial streams.
//!
//! Every sampling routine in this crate draws uniform variates through
//! [`uniform`], which consumes exactly one 64-bit word from the generator.
//! Counting words is therefore enough to align two engines on one stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform variate in `[0, 1)` built from the top 53 bits of one word.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw from a cumulative table. Consumes one variate, also when
/// the table is a point mass.
#[inline]
pub fn sample_cdf<R: RngCore + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u = uniform(rng);
    index_for(cdf, u)
}

/// First index whose cumulative mass exceeds `u`. Trailing zero-mass entries
/// are never returned.
#[inline]
pub fn index_for(cdf: &[f64], u: f64) -> usize {
    let last = cdf.len() - 1;
    for (i, &c) in cdf.iter().enumerate() {
        if u < c {
            return i;
        }
    }
    // u landed in rounding slack above the final cumulative value
    let mut i = last;
    while i > 0 && cdf[i] == cdf[i - 1] {
        i -= 1;
    }
    i
}

/// Cumulative table for a probability vector.
pub fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Generator for trial `trial` under master seed `seed`.
///
/// The stream is ChaCha8 keyed by `seed` with stream id `trial`, so adding
/// trials never perturbs the streams of earlier ones.
pub fn trial_stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Replays a fixed list of words, then panics. Used to drive two engines
/// with structurally aligned variates.
#[derive(Debug, Clone)]
pub struct ReplayRng {
    words: Vec<u64>,
    pos: usize,
}

impl ReplayRng {
    pub fn new(words: Vec<u64>) -> Self {
        Self { words, pos: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl RngCore for ReplayRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let w = *self.words.get(self.pos).expect("replay stream exhausted");
        self.pos += 1;
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}
