//! Counter-based sample streams.
//!
//! Every draw is a pure function of `(seed, stream, index)`: block `index`
//! starts at a fixed ChaCha word position, so results never depend on how
//! many blocks were drawn before or on which thread drew them.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream ids reserved by the library. Callers may use any other value.
pub mod streams {
    pub const SIGNS: u64 = 0x5167_0000;
    pub const KEYS: u64 = 0x4B45_5900;
    pub const QUERIES: u64 = 0x5155_4500;
    pub const NOISE: u64 = 0x4E4F_4953;
    pub const SPHERE: u64 = 0x5350_4845;
    pub const UNIFORM: u64 = 0x554E_4946;
}

/// A seeded, splittable source of reproducible random blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleStream {
    seed: u64,
    stream: u64,
}

impl SampleStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Derives an independent child stream (e.g. one per experiment seed).
    pub fn child(&self, id: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(id.wrapping_add(0x9E37_79B9_7F4A_7C15))),
            stream: self.stream,
        }
    }

    fn rng_at(&self, word_pos: u128) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(word_pos);
        rng
    }

    /// Fills `out` with the raw 64-bit words of block `index`, where every
    /// block of this stream has `out.len()` words.
    pub fn words_at(&self, index: u64, out: &mut [u64]) {
        let stride = 2 * out.len() as u128;
        let mut rng = self.rng_at(index as u128 * stride);
        for w in out.iter_mut() {
            *w = rng.next_u64();
        }
    }

    /// Fills `out` with standard normal draws forming block `index`; all
    /// blocks of this stream are assumed to share `out.len()`.
    pub fn gaussians_at(&self, index: u64, out: &mut [f64]) {
        let pairs = out.len().div_ceil(2);
        let mut rng = self.rng_at(index as u128 * 4 * pairs as u128);
        for chunk in out.chunks_mut(2) {
            let u1 = unit_open_closed(rng.next_u64());
            let u2 = unit_closed_open(rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
            chunk[0] = r * c;
            if let Some(z) = chunk.get_mut(1) {
                *z = r * s;
            }
        }
    }

    pub fn gaussian_vec(&self, index: u64, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        self.gaussians_at(index, &mut v);
        v
    }

    /// `count` consecutive Gaussian blocks of length `dim`, row-major.
    pub fn gaussian_matrix(&self, count: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..count as u64).map(|i| self.gaussian_vec(i, dim)).collect()
    }

    /// Uniform draws in `[0, 1)` forming block `index`.
    pub fn uniforms_at(&self, index: u64, out: &mut [f64]) {
        let mut rng = self.rng_at(index as u128 * 2 * out.len() as u128);
        for x in out.iter_mut() {
            *x = unit_closed_open(rng.next_u64());
        }
    }
}

fn unit_open_closed(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn unit_closed_open(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
