//! Deterministic random stream derivation.
//!
//! Every Monte Carlo trial owns an independent generator derived from the
//! triple (master seed, sweep index, trial index), so results do not depend
//! on worker count or scheduling order.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Identifies one random stream. Recorded alongside synthesized data so any
/// snapshot set can be regenerated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub master_seed: u64,
    pub sweep_index: u64,
    pub trial_index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, sweep_index: u64, trial_index: u64) -> Self {
        Self {
            master_seed,
            sweep_index,
            trial_index,
        }
    }

    /// Generator for this stream. Distinct keys give statistically
    /// independent streams; equal keys give bitwise-identical ones.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = splitmix64(self.master_seed);
        h = splitmix64(h ^ self.sweep_index);
        h = splitmix64(h ^ self.trial_index);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// One round of the splitmix64 output function; full-period bijective mixer.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
