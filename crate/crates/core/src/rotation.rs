//! Sign-flipped Walsh-Hadamard rotation `R = H · diag(s)`.
//!
//! `H` is the normalized Hadamard matrix, applied by an in-place butterfly
//! with the `1/√d` scale folded into a single final multiply.

use crate::error::{invalid, Result};
use crate::rng::{streams, SampleStream};

/// Seeded orthogonal preconditioner. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationSpec {
    dim: usize,
    seed: u64,
    signs: Vec<i8>,
}

impl RotationSpec {
    /// Draws the sign vector for `(dim, seed)`. `dim` must be a power of two ≥ 2.
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 || !dim.is_power_of_two() {
            return invalid(format!("rotation dimension {dim} is not a power of two >= 2"));
        }
        let mut words = vec![0u64; dim.div_ceil(64)];
        SampleStream::new(seed, streams::SIGNS).words_at(0, &mut words);
        let signs = (0..dim)
            .map(|i| if (words[i / 64] >> (i % 64)) & 1 == 1 { -1 } else { 1 })
            .collect();
        Ok(Self { dim, seed, signs })
    }

    /// A rotation with explicit signs (used by tests and fixtures).
    pub fn with_signs(signs: Vec<i8>) -> Result<Self> {
        let dim = signs.len();
        if dim < 2 || !dim.is_power_of_two() {
            return invalid(format!("rotation dimension {dim} is not a power of two >= 2"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return invalid("sign entries must be +1 or -1");
        }
        Ok(Self { dim, seed: 0, signs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return invalid(format!("vector length {} does not match rotation dim {}", v.len(), self.dim));
        }
        Ok(())
    }

    /// `H · (s ⊙ v)`.
    pub fn rotate(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out: Vec<f64> = v.iter().zip(&self.signs).map(|(x, &s)| x * f64::from(s)).collect();
        fwht_normalized(&mut out);
        Ok(out)
    }

    /// `diag(s) · H · v`, the transpose (and inverse) of [`rotate`](Self::rotate).
    pub fn rotate_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out = v.to_vec();
        fwht_normalized(&mut out);
        for (x, &s) in out.iter_mut().zip(&self.signs) {
            *x *= f64::from(s);
        }
        Ok(out)
    }
}

/// Convenience constructor mirroring [`RotationSpec::new`].
pub fn make_rotation(dim: usize, seed: u64) -> Result<RotationSpec> {
    RotationSpec::new(dim, seed)
}

/// In-place normalized Walsh-Hadamard transform; `data.len()` must be a power of two.
pub fn fwht_normalized(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in data.iter_mut() {
        *x *= scale;
    }
}
