//! The triplet codec: norm/direction split, rotation, octahedral triplets,
//! joint rounding, reconstruction and factorized scoring.

use std::sync::Arc;

use super::config::{CodecConfig, Rounding};
use super::qjl::{validate_sidecar, QjlSidecar, QjlSketch};
use crate::error::{format, invalid, Result};
use crate::lloydmax::{Codebook, CodebookPair};
use crate::octahedral::{oct_decode_xy, oct_encode, EPS};
use crate::rotation::RotationSpec;

/// Compressed state of one key.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedKey {
    pub gamma: f32,
    /// `2 · n_tri` indices, `(ξ, η)` per triplet.
    pub dir: Vec<u8>,
    /// `n_tri` indices.
    pub nrm: Vec<u8>,
    pub qjl: Option<QjlSidecar>,
}

/// Code chosen for one triplet, with the winning projection `s* = tᵀ n̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletCode {
    pub xi: usize,
    pub eta: usize,
    pub rho: usize,
    pub score: f64,
}

/// Squared error `‖t − ρ̂ n̂‖²` of a code.
pub fn triplet_loss(t: [f64; 3], xi: &Codebook, rho: &Codebook, code: &TripletCode) -> f64 {
    let n = oct_decode_xy(xi.centroid(code.xi), xi.centroid(code.eta));
    let r = rho.centroid(code.rho);
    (0..3).map(|i| (t[i] - r * n[i]).powi(2)).sum()
}

#[inline]
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Picks the direction maximizing `tᵀ n̂` over the mode's candidate set
/// (first candidate in row-major order wins ties), then the norm centroid
/// nearest to `clip(s*, 0, 1)`. Scalar mode instead rounds all three
/// coordinates independently, so its norm index comes from `‖t‖`.
pub fn joint_round_triplet(t: [f64; 3], xi: &Codebook, rho: &Codebook, mode: Rounding) -> TripletCode {
    let c = oct_encode(t);
    let seed = (xi.quantize_index(c.xi), xi.quantize_index(c.eta));
    let top = xi.len() as isize - 1;
    let mut best = (f64::NEG_INFINITY, seed.0, seed.1);
    let mut consider = |jx: usize, jy: usize| {
        let s = dot3(t, oct_decode_xy(xi.centroid(jx), xi.centroid(jy)));
        if s > best.0 {
            best = (s, jx, jy);
        }
    };
    match mode {
        Rounding::Scalar => consider(seed.0, seed.1),
        Rounding::Local2x2 => {
            for dx in 0..=1 {
                for dy in 0..=1 {
                    consider((seed.0 + dx).min(top as usize), (seed.1 + dy).min(top as usize));
                }
            }
        }
        Rounding::Local3x3 => {
            for dx in -1isize..=1 {
                for dy in -1isize..=1 {
                    let jx = (seed.0 as isize + dx).clamp(0, top) as usize;
                    let jy = (seed.1 as isize + dy).clamp(0, top) as usize;
                    consider(jx, jy);
                }
            }
        }
        Rounding::Full => {
            for jx in 0..xi.len() {
                for jy in 0..xi.len() {
                    consider(jx, jy);
                }
            }
        }
    }
    let (score, jx, jy) = best;
    let target = match mode {
        Rounding::Scalar => dot3(t, t).sqrt(),
        _ => score,
    };
    TripletCode { xi: jx, eta: jy, rho: rho.quantize_index(target.clamp(0.0, 1.0)), score }
}

/// A query prepared for repeated scoring against compressed keys.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    /// `R q`, zero-padded to `3 · n_tri`.
    pub rotated: Vec<f64>,
    /// `R' R q` when the codec carries a residual sketch.
    pub projected: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct OctopusCodec {
    cfg: CodecConfig,
    rotation: RotationSpec,
    books: CodebookPair,
    qjl: Option<QjlSketch>,
}

impl OctopusCodec {
    /// Builds a codec; the books must match `cfg`'s bit widths.
    pub fn new(cfg: CodecConfig, books: CodebookPair) -> Result<Self> {
        cfg.validate()?;
        if books.xi.bits() != cfg.b_dir || books.rho.bits() != cfg.b_nrm {
            return invalid(format!(
                "codebooks ({}, {}) bits do not match config ({}, {})",
                books.xi.bits(),
                books.rho.bits(),
                cfg.b_dir,
                cfg.b_nrm
            ));
        }
        let rotation = RotationSpec::new(cfg.dim, cfg.rotation_seed)?;
        let qjl = if cfg.qjl { Some(QjlSketch::new(RotationSpec::new(cfg.dim, cfg.qjl_seed)?)) } else { None };
        Ok(Self { cfg, rotation, books, qjl })
    }

    /// A codec backed by the standard trained codebooks.
    pub fn standard(cfg: CodecConfig) -> Result<Self> {
        let books = CodebookPair::standard(cfg.dim, cfg.b_dir, cfg.b_nrm)?;
        Self::new(cfg, books)
    }

    pub fn config(&self) -> &CodecConfig {
        &self.cfg
    }

    pub fn rotation(&self) -> &RotationSpec {
        &self.rotation
    }

    pub fn books(&self) -> &CodebookPair {
        &self.books
    }

    pub fn xi_book(&self) -> &Arc<Codebook> {
        &self.books.xi
    }

    pub fn rho_book(&self) -> &Arc<Codebook> {
        &self.books.rho
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.cfg.dim {
            return invalid(format!("vector length {} does not match codec dim {}", v.len(), self.cfg.dim));
        }
        Ok(())
    }

    /// `‖k‖` and the rotated unit direction `u = R k / max(‖k‖, ε)`.
    pub fn split_and_rotate(&self, k: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(k)?;
        if k.iter().any(|x| !x.is_finite()) {
            return invalid("key has non-finite entries");
        }
        let gamma = k.iter().map(|x| x * x).sum::<f64>().sqrt();
        let inv = 1.0 / gamma.max(EPS);
        let unit: Vec<f64> = k.iter().map(|x| x * inv).collect();
        Ok((gamma, self.rotation.rotate(&unit)?))
    }

    /// Rotated-frame triplets, the last one zero padded.
    pub fn triplets(&self, u: &[f64]) -> Vec<[f64; 3]> {
        (0..self.cfg.n_tri())
            .map(|i| {
                let mut t = [0.0; 3];
                for (j, x) in t.iter_mut().enumerate() {
                    *x = u.get(3 * i + j).copied().unwrap_or(0.0);
                }
                t
            })
            .collect()
    }

    /// Codes for the triplets of a rotated unit vector.
    pub fn encode_rotated(&self, u: &[f64]) -> Vec<TripletCode> {
        self.triplets(u)
            .into_iter()
            .map(|t| joint_round_triplet(t, &self.books.xi, &self.books.rho, self.cfg.rounding))
            .collect()
    }

    pub fn encode(&self, k: &[f64]) -> Result<CompressedKey> {
        let (gamma, u) = self.split_and_rotate(k)?;
        let codes = self.encode_rotated(&u);
        let mut ck = CompressedKey {
            gamma: gamma as f32,
            dir: codes.iter().flat_map(|c| [c.xi as u8, c.eta as u8]).collect(),
            nrm: codes.iter().map(|c| c.rho as u8).collect(),
            qjl: None,
        };
        if let Some(sketch) = &self.qjl {
            let u_hat = self.reconstruct_rotated(&ck)?;
            let residual: Vec<f64> = u.iter().zip(&u_hat).map(|(a, b)| a - b).collect();
            ck.qjl = Some(sketch.sketch(&residual)?);
        }
        Ok(ck)
    }

    /// Validates a state against this codec's layout.
    pub fn check_state(&self, ck: &CompressedKey) -> Result<()> {
        let n_tri = self.cfg.n_tri();
        if ck.dir.len() != 2 * n_tri || ck.nrm.len() != n_tri {
            return format("compressed key has the wrong number of indices");
        }
        if ck.dir.iter().any(|&i| usize::from(i) >= self.books.xi.len())
            || ck.nrm.iter().any(|&i| usize::from(i) >= self.books.rho.len())
        {
            return format("compressed key index out of codebook range");
        }
        if !ck.gamma.is_finite() || ck.gamma.is_sign_negative() {
            return format("key norm must be finite and non-negative");
        }
        match (&ck.qjl, &self.qjl) {
            (Some(side), Some(_)) => validate_sidecar(side, self.cfg.dim),
            (None, None) => Ok(()),
            _ => format("residual sidecar presence does not match the codec"),
        }
    }

    /// `û` in the rotated frame, padding dropped (length `dim`).
    pub fn reconstruct_rotated(&self, ck: &CompressedKey) -> Result<Vec<f64>> {
        let n_tri = self.cfg.n_tri();
        if ck.dir.len() != 2 * n_tri || ck.nrm.len() != n_tri {
            return format("compressed key has the wrong number of indices");
        }
        let (xi, rho) = (&self.books.xi, &self.books.rho);
        let mut u = Vec::with_capacity(3 * n_tri);
        for i in 0..n_tri {
            let (a, b, r) = (ck.dir[2 * i] as usize, ck.dir[2 * i + 1] as usize, ck.nrm[i] as usize);
            if a >= xi.len() || b >= xi.len() || r >= rho.len() {
                return format("compressed key index out of codebook range");
            }
            let n = oct_decode_xy(xi.centroid(a), xi.centroid(b));
            let r = rho.centroid(r);
            u.extend(n.iter().map(|x| r * x));
        }
        u.truncate(self.cfg.dim);
        Ok(u)
    }

    /// `k̂ = γ Rᵀ û`. The residual sidecar does not affect reconstruction.
    pub fn decode(&self, ck: &CompressedKey) -> Result<Vec<f64>> {
        let u = self.reconstruct_rotated(ck)?;
        let gamma = f64::from(ck.gamma);
        Ok(self.rotation.rotate_inverse(&u)?.into_iter().map(|x| gamma * x).collect())
    }

    pub fn prepare_query(&self, q: &[f64]) -> Result<PreparedQuery> {
        self.check_dim(q)?;
        self.prepare_rotated_query(self.rotation.rotate(q)?)
    }

    /// Prepares a query already in the rotated frame.
    pub fn prepare_rotated_query(&self, q_rot: Vec<f64>) -> Result<PreparedQuery> {
        self.check_dim(&q_rot)?;
        let projected = match &self.qjl {
            Some(sketch) => Some(sketch.project_query(&q_rot)?),
            None => None,
        };
        let mut rotated = q_rot;
        rotated.resize(3 * self.cfg.n_tri(), 0.0);
        Ok(PreparedQuery { rotated, projected })
    }

    /// `γ Σᵢ ρ̂ᵢ q_rot,iᵀ n̂ᵢ`, never materializing `k̂`.
    pub fn score_uncorrected(&self, q: &PreparedQuery, ck: &CompressedKey) -> f64 {
        let (xi, rho) = (&self.books.xi, &self.books.rho);
        let mut acc = 0.0;
        for (i, qt) in q.rotated.chunks_exact(3).enumerate() {
            let n = oct_decode_xy(xi.centroid(ck.dir[2 * i] as usize), xi.centroid(ck.dir[2 * i + 1] as usize));
            acc += rho.centroid(ck.nrm[i] as usize) * (qt[0] * n[0] + qt[1] * n[1] + qt[2] * n[2]);
        }
        f64::from(ck.gamma) * acc
    }

    /// Factorized score plus, when present, the residual-sketch correction.
    pub fn score_prepared(&self, q: &PreparedQuery, ck: &CompressedKey) -> f64 {
        let base = self.score_uncorrected(q, ck);
        match (&self.qjl, &q.projected, &ck.qjl) {
            (Some(sketch), Some(p), Some(side)) => base + f64::from(ck.gamma) * sketch.estimate(p, side),
            _ => base,
        }
    }

    pub fn score(&self, q: &[f64], ck: &CompressedKey) -> Result<f64> {
        self.check_state(ck)?;
        Ok(self.score_prepared(&self.prepare_query(q)?, ck))
    }

    /// Score for a query already in the rotated frame.
    pub fn score_rotated(&self, q_rot: &[f64], ck: &CompressedKey) -> Result<f64> {
        self.check_state(ck)?;
        Ok(self.score_prepared(&self.prepare_rotated_query(q_rot.to_vec())?, ck))
    }

    pub fn qjl_sketch(&self) -> Option<&QjlSketch> {
        self.qjl.as_ref()
    }
}
