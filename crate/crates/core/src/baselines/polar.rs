//! Recursive polar parameterization of a unit vector.
//!
//! For `dim = 2^L` the vector is viewed as a binary tree. Each leaf pair
//! `(x, y)` stores its planar angle `atan2(y, x) ∈ [-π, π]`; each internal
//! node at level `ℓ ≥ 2` (covering `2^ℓ` coordinates) stores
//! `ψ = atan2(‖right‖, ‖left‖) ∈ [0, π/2]`. Angles are laid out leaves
//! first, then level by level up to the root: `dim - 1` angles in all.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{format, Result};
use crate::lloydmax::{polar_angle_codebook, uniform_codebook, Codebook};

/// Angles of a vector, leaves first. `u.len()` must be a power of two ≥ 2.
pub fn polar_angles(u: &[f64]) -> Vec<f64> {
    let d = u.len();
    let mut angles = Vec::with_capacity(d - 1);
    let mut norms: Vec<f64> = u
        .chunks_exact(2)
        .map(|p| {
            angles.push(p[1].atan2(p[0]));
            p[0].hypot(p[1])
        })
        .collect();
    while norms.len() > 1 {
        norms = norms
            .chunks_exact(2)
            .map(|p| {
                angles.push(p[1].atan2(p[0]));
                p[0].hypot(p[1])
            })
            .collect();
    }
    angles
}

/// Unit vector from angles laid out as by [`polar_angles`].
pub fn polar_compose(angles: &[f64]) -> Vec<f64> {
    let d = angles.len() + 1;
    // Offsets of each level, leaves first.
    let mut offsets = Vec::new();
    let (mut off, mut count) = (0, d / 2);
    while count >= 1 {
        offsets.push((off, count));
        off += count;
        if count == 1 {
            break;
        }
        count /= 2;
    }
    let mut norms = vec![1.0];
    for &(off, count) in offsets.iter().skip(1).rev() {
        let mut next = Vec::with_capacity(2 * count);
        for (j, &n) in norms.iter().enumerate() {
            let (s, c) = angles[off + j].sin_cos();
            next.push(n * c);
            next.push(n * s);
        }
        norms = next;
    }
    let mut u = Vec::with_capacity(d);
    for (j, &n) in norms.iter().enumerate() {
        let (s, c) = angles[j].sin_cos();
        u.push(n * c);
        u.push(n * s);
    }
    u
}

/// Angle codebooks for one dimension: a uniform book for leaf angles and
/// one book per internal level.
#[derive(Debug, Clone)]
pub struct PolarBooks {
    dim: usize,
    leaf: Arc<Codebook>,
    /// `levels[i]` serves level `i + 2` (halves of `2^(i+1)` coordinates).
    levels: Vec<Arc<Codebook>>,
}

pub fn polar_books(dim: usize, bits: u8) -> Result<PolarBooks> {
    let leaf = uniform_codebook(-PI, PI, bits)?;
    let mut levels = Vec::new();
    let mut half = 2;
    while half < dim {
        levels.push(polar_angle_codebook(half, bits)?);
        half *= 2;
    }
    Ok(PolarBooks { dim, leaf, levels })
}

impl PolarBooks {
    fn book_for(&self, position: usize) -> &Codebook {
        // Leaves occupy the first dim/2 positions, then dim/4, ...
        let mut start = 0;
        let mut count = self.dim / 2;
        let mut level = 1;
        while position >= start + count {
            start += count;
            count /= 2;
            level += 1;
        }
        if level == 1 {
            &self.leaf
        } else {
            &self.levels[level - 2]
        }
    }

    pub fn quantize(&self, angles: &[f64]) -> Vec<u8> {
        angles.iter().enumerate().map(|(i, &a)| self.book_for(i).quantize_index(a) as u8).collect()
    }

    pub fn dequantize(&self, indices: &[u8]) -> Result<Vec<f64>> {
        if indices.len() != self.dim - 1 {
            return format("polar state has the wrong number of angles");
        }
        indices
            .iter()
            .enumerate()
            .map(|(i, &j)| self.book_for(i).dequantize(j.into()).map_err(|e| crate::Error::Format(e.to_string())))
            .collect()
    }
}
