//! Counter-based Gaussian variates.
//!
//! Every variate is a pure function of `(master_seed, stream_index, draw_index)`:
//! the ChaCha20 keystream is keyed from `master_seed`, the ChaCha stream id is
//! `stream_index`, and draw `k` consumes exactly the two 64-bit words at keystream
//! word offset `4k`. The two words become uniforms `u1 ∈ (0, 1]` and `u2 ∈ [0, 1)`
//! (53-bit mantissas) which are mapped through the cosine branch of Box–Muller,
//! `sqrt(-2 ln u1) cos(2π u2)`. Because consumption per draw is fixed, draws can
//! be generated sequentially or addressed randomly with identical results.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::TAU;

/// Identifies one reproducible stream of variates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// Same master seed, different stream.
    pub fn with_stream(self, stream_index: u64) -> Self {
        Self {
            stream_index,
            ..self
        }
    }

    pub fn normals(&self) -> NormalStream {
        NormalStream::new(*self)
    }
}

const WORDS_PER_DRAW: u128 = 4;

pub struct NormalStream {
    rng: ChaCha20Rng,
    next_index: u64,
}

impl NormalStream {
    pub fn new(seed: SeedSpec) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.master_seed);
        rng.set_stream(seed.stream_index);
        rng.set_word_pos(0);
        Self { rng, next_index: 0 }
    }

    /// Index of the variate the next call to [`NormalStream::next_normal`] returns.
    pub fn position(&self) -> u64 {
        self.next_index
    }

    pub fn seek(&mut self, draw_index: u64) {
        self.rng.set_word_pos(draw_index as u128 * WORDS_PER_DRAW);
        self.next_index = draw_index;
    }

    /// Random access to draw `draw_index`; leaves the stream positioned after it.
    pub fn at(&mut self, draw_index: u64) -> f64 {
        self.seek(draw_index);
        self.next_normal()
    }

    pub fn next_normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        self.next_index += 1;
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = self.next_normal();
        }
    }

    pub fn take_vec(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill(&mut v);
        v
    }
}
