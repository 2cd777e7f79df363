//! One-bit sign sketch of a rotated-frame residual.
//!
//! For a residual `r` and an independent rotation `R'`, the sketch stores
//! `σ = sign(R' r)` and `γ_r = ‖r‖` in f16. The inner product `aᵀr` is
//! estimated by `√(π / 2d) · γ_r · (R' a)ᵀ σ`.

use half::f16;

use crate::error::{format, Result};
use crate::rotation::RotationSpec;

/// The stored sidecar: residual norm and `dim` sign bits (1 means +1).
#[derive(Debug, Clone, PartialEq)]
pub struct QjlSidecar {
    pub gamma_r: f16,
    pub signs: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct QjlSketch {
    projection: RotationSpec,
    scale: f64,
}

impl QjlSketch {
    pub fn new(projection: RotationSpec) -> Self {
        let scale = (std::f64::consts::PI / (2.0 * projection.dim() as f64)).sqrt();
        Self { projection, scale }
    }

    pub fn dim(&self) -> usize {
        self.projection.dim()
    }

    pub fn sketch(&self, residual: &[f64]) -> Result<QjlSidecar> {
        let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
        let projected = self.projection.rotate(residual)?;
        let mut signs = vec![0u8; self.dim().div_ceil(8)];
        for (i, &p) in projected.iter().enumerate() {
            if p >= 0.0 {
                signs[i / 8] |= 1 << (i % 8);
            }
        }
        Ok(QjlSidecar { gamma_r: f16::from_f64(norm), signs })
    }

    /// `R' a`, computed once per query.
    pub fn project_query(&self, a: &[f64]) -> Result<Vec<f64>> {
        self.projection.rotate(a)
    }

    /// Estimate of `aᵀr` given the projected query `R' a`.
    pub fn estimate(&self, projected_query: &[f64], side: &QjlSidecar) -> f64 {
        let mut acc = 0.0;
        for (i, &p) in projected_query.iter().enumerate() {
            if (side.signs[i / 8] >> (i % 8)) & 1 == 1 {
                acc += p;
            } else {
                acc -= p;
            }
        }
        self.scale * side.gamma_r.to_f64() * acc
    }
}

pub(crate) fn validate_sidecar(side: &QjlSidecar, dim: usize) -> Result<()> {
    let g = side.gamma_r;
    if !g.is_finite() || g.is_sign_negative() {
        return format("residual norm must be finite and non-negative");
    }
    if side.signs.len() != dim.div_ceil(8) {
        return format("sign sketch has the wrong length");
    }
    if !dim.is_multiple_of(8) && side.signs[dim / 8] >> (dim % 8) != 0 {
        return format("nonzero padding bits in sign sketch");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SampleStream;

    #[test]
    fn sign_convention_and_norm() {
        let sk = QjlSketch::new(RotationSpec::with_signs(vec![1, 1, 1, 1]).unwrap());
        // H maps (1,1,1,1) to (2,0,0,0); the zeros count as +1.
        let side = sk.sketch(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(side.signs, vec![0b1111]);
        assert_eq!(side.gamma_r.to_f64(), 2.0);
    }

    #[test]
    fn estimator_tracks_inner_product() {
        // Averaged over many projections the estimate approaches aᵀr.
        let dim = 128;
        let s = SampleStream::new(8, 0);
        let a = s.gaussian_vec(0, dim);
        let r = s.gaussian_vec(1, dim);
        let truth: f64 = a.iter().zip(&r).map(|(x, y)| x * y).sum();
        let n = 2000;
        let mean = (0..n)
            .map(|seed| {
                let sk = QjlSketch::new(RotationSpec::new(dim, 1000 + seed).unwrap());
                let side = sk.sketch(&r).unwrap();
                sk.estimate(&sk.project_query(&a).unwrap(), &side)
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - truth).abs() < 0.1 * truth.abs().max(10.0), "{mean} vs {truth}");
    }
}
