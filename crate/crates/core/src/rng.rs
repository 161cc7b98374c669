//! Counter-style random streams.
//!
//! Every draw is addressed by `(master_seed, replication, step)`: the
//! arrival sequence of replication `i` and the policy draws at step `t` are
//! independent of how many replications run, in which order, or on how many
//! threads. Arrivals use ChaCha stream `2i`; policy draws use stream
//! `2i + 1`, with the preferred draw of step `t` at word `t * STEP_STRIDE`
//! and the fallback draw half a stride later.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ExpectationGraph;

/// 32-bit words reserved per step; a step uses a handful.
const STEP_STRIDE: u128 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    pub master_seed: u64,
    pub replication: u64,
}

impl Streams {
    pub fn new(master_seed: u64, replication: u64) -> Self {
        Self {
            master_seed,
            replication,
        }
    }

    pub fn arrivals(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replication.wrapping_mul(2));
        rng
    }

    /// Generator for the preferred-worker draw at 1-based step `t`.
    pub fn preferred(&self, t: usize) -> ChaCha8Rng {
        self.policy_at(t as u128 * STEP_STRIDE)
    }

    /// Generator for the fallback draw at 1-based step `t`.
    pub fn fallback(&self, t: usize) -> ChaCha8Rng {
        self.policy_at(t as u128 * STEP_STRIDE + STEP_STRIDE / 2)
    }

    fn policy_at(&self, word: u128) -> ChaCha8Rng {
        let mut rng = self.policy();
        rng.set_word_pos(word);
        rng
    }

    /// Reusable policy generator; `seek_*` gives the same draws as
    /// [`Streams::preferred`] and [`Streams::fallback`] without reseeding.
    pub fn policy(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replication.wrapping_mul(2).wrapping_add(1));
        rng
    }
}

pub fn seek_preferred(rng: &mut ChaCha8Rng, t: usize) -> &mut ChaCha8Rng {
    rng.set_word_pos(t as u128 * STEP_STRIDE);
    rng
}

pub fn seek_fallback(rng: &mut ChaCha8Rng, t: usize) -> &mut ChaCha8Rng {
    rng.set_word_pos(t as u128 * STEP_STRIDE + STEP_STRIDE / 2);
    rng
}

/// Samples an index from exact integer weights. `cumulative[i]` is the sum
/// of the first `i + 1` weights; zero-weight entries are never returned.
pub fn sample_cumulative(rng: &mut impl Rng, cumulative: &[u64]) -> usize {
    let total = *cumulative.last().expect("non-empty weights");
    let x = rng.random_range(0..total);
    cumulative.partition_point(|&c| c <= x)
}

/// Draws `n` i.i.d. job types with probabilities `numerators / D`.
pub fn sample_arrivals(instance: &ExpectationGraph, streams: Streams) -> Vec<usize> {
    let cumulative = cumulative(instance.numerators());
    let mut rng = streams.arrivals();
    (0..instance.n())
        .map(|_| sample_cumulative(&mut rng, &cumulative))
        .collect()
}

pub fn cumulative(weights: &[u64]) -> Vec<u64> {
    weights
        .iter()
        .scan(0u64, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}
