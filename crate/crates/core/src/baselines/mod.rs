//! Comparison codecs sharing the rotation preconditioner: per-coordinate
//! Lloyd-Max (`tq_mse`), the same at one bit less plus a residual sign
//! sketch (`tq_qjl`), and recursive polar angles (`polar`).

mod pack;
mod polar;

use std::sync::Arc;

use crate::codec::{QjlSidecar, QjlSketch};
use crate::error::{format, invalid, Result};
use crate::lloydmax::{coord_codebook, Codebook};
use crate::rotation::RotationSpec;

pub use pack::{pack_baseline_keys, unpack_baseline_keys, BaselineHeader, BASELINE_MAGIC};
pub use polar::{polar_angles, polar_books, polar_compose, PolarBooks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    TqMse,
    TqQjl,
    Polar,
}

impl BaselineKind {
    pub fn code(self) -> u8 {
        match self {
            BaselineKind::TqMse => 0,
            BaselineKind::TqQjl => 1,
            BaselineKind::Polar => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => BaselineKind::TqMse,
            1 => BaselineKind::TqQjl,
            2 => BaselineKind::Polar,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub dim: usize,
    pub bits: u8,
    pub rotation_seed: u64,
    pub qjl_seed: u64,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind, dim: usize, bits: u8) -> Result<Self> {
        let cfg = Self { kind, dim, bits, rotation_seed: 0, qjl_seed: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seeds(mut self, rotation_seed: u64, qjl_seed: u64) -> Self {
        self.rotation_seed = rotation_seed;
        self.qjl_seed = qjl_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 4 || !self.dim.is_power_of_two() {
            return invalid(format!("baseline dimension {} must be a power of two >= 4", self.dim));
        }
        if !(1..=8).contains(&self.bits) {
            return invalid(format!("baseline bits {} outside [1, 8]", self.bits));
        }
        if self.kind == BaselineKind::TqQjl {
            if self.bits < 2 {
                return invalid("tq_qjl needs at least two bits (one goes to the residual)");
            }
            if self.qjl_seed == self.rotation_seed {
                return invalid("the residual projection needs a seed distinct from the rotation seed");
            }
        }
        Ok(())
    }

    /// Bits per stored index.
    pub fn index_bits(&self) -> u8 {
        match self.kind {
            BaselineKind::TqQjl => self.bits - 1,
            _ => self.bits,
        }
    }

    /// Stored indices per key: one per coordinate, or `dim - 1` angles.
    pub fn index_count(&self) -> usize {
        match self.kind {
            BaselineKind::Polar => self.dim - 1,
            _ => self.dim,
        }
    }
}

/// Compressed state of one key under a baseline codec.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    pub gamma: f32,
    pub indices: Vec<u8>,
    pub qjl: Option<QjlSidecar>,
}

#[derive(Debug, Clone)]
enum Books {
    Coordinate(Arc<Codebook>),
    Polar(PolarBooks),
}

/// A query prepared for repeated scoring.
#[derive(Debug, Clone)]
pub struct BaselineQuery {
    pub rotated: Vec<f64>,
    pub projected: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct BaselineCodec {
    cfg: BaselineConfig,
    rotation: RotationSpec,
    books: Books,
    qjl: Option<QjlSketch>,
}

impl BaselineCodec {
    /// Builds a baseline with its standard trained codebooks.
    pub fn standard(cfg: BaselineConfig) -> Result<Self> {
        cfg.validate()?;
        let books = match cfg.kind {
            BaselineKind::Polar => Books::Polar(polar_books(cfg.dim, cfg.bits)?),
            _ => Books::Coordinate(coord_codebook(cfg.dim, cfg.index_bits())?),
        };
        Self::with_books(cfg, books)
    }

    /// A per-coordinate baseline with an explicit coordinate codebook.
    pub fn with_coordinate_book(cfg: BaselineConfig, book: Arc<Codebook>) -> Result<Self> {
        cfg.validate()?;
        if cfg.kind == BaselineKind::Polar {
            return invalid("polar baseline takes angle books, not a coordinate book");
        }
        if book.bits() != cfg.index_bits() {
            return invalid(format!("coordinate book has {} bits, expected {}", book.bits(), cfg.index_bits()));
        }
        Self::with_books(cfg, Books::Coordinate(book))
    }

    fn with_books(cfg: BaselineConfig, books: Books) -> Result<Self> {
        let rotation = RotationSpec::new(cfg.dim, cfg.rotation_seed)?;
        let qjl = match cfg.kind {
            BaselineKind::TqQjl => Some(QjlSketch::new(RotationSpec::new(cfg.dim, cfg.qjl_seed)?)),
            _ => None,
        };
        Ok(Self { cfg, rotation, books, qjl })
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.cfg
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.cfg.dim {
            return invalid(format!("vector length {} does not match baseline dim {}", v.len(), self.cfg.dim));
        }
        Ok(())
    }

    pub fn encode(&self, k: &[f64]) -> Result<BaselineState> {
        self.check_dim(k)?;
        if k.iter().any(|x| !x.is_finite()) {
            return invalid("key has non-finite entries");
        }
        let gamma = k.iter().map(|x| x * x).sum::<f64>().sqrt();
        let inv = 1.0 / gamma.max(crate::octahedral::EPS);
        let unit: Vec<f64> = k.iter().map(|x| x * inv).collect();
        let u = self.rotation.rotate(&unit)?;
        let indices: Vec<u8> = match &self.books {
            Books::Coordinate(book) => u.iter().map(|&x| book.quantize_index(x) as u8).collect(),
            Books::Polar(books) => books.quantize(&polar_angles(&u)),
        };
        let mut state = BaselineState { gamma: gamma as f32, indices, qjl: None };
        if let Some(sketch) = &self.qjl {
            let u_hat = self.reconstruct_rotated(&state)?;
            let residual: Vec<f64> = u.iter().zip(&u_hat).map(|(a, b)| a - b).collect();
            state.qjl = Some(sketch.sketch(&residual)?);
        }
        Ok(state)
    }

    /// Rotated-frame reconstruction `û`.
    pub fn reconstruct_rotated(&self, state: &BaselineState) -> Result<Vec<f64>> {
        if state.indices.len() != self.cfg.index_count() {
            return format("baseline state has the wrong number of indices");
        }
        match &self.books {
            Books::Coordinate(book) => state
                .indices
                .iter()
                .map(|&i| book.dequantize(i.into()).map_err(|e| crate::Error::Format(e.to_string())))
                .collect(),
            Books::Polar(books) => Ok(polar_compose(&books.dequantize(&state.indices)?)),
        }
    }

    pub fn decode(&self, state: &BaselineState) -> Result<Vec<f64>> {
        let u = self.reconstruct_rotated(state)?;
        let g = f64::from(state.gamma);
        Ok(self.rotation.rotate_inverse(&u)?.into_iter().map(|x| g * x).collect())
    }

    pub fn prepare_query(&self, q: &[f64]) -> Result<BaselineQuery> {
        self.check_dim(q)?;
        let rotated = self.rotation.rotate(q)?;
        let projected = match &self.qjl {
            Some(sketch) => Some(sketch.project_query(&rotated)?),
            None => None,
        };
        Ok(BaselineQuery { rotated, projected })
    }

    /// `γ q_rotᵀ û` without the residual correction.
    pub fn score_uncorrected(&self, q: &BaselineQuery, state: &BaselineState) -> Result<f64> {
        let g = f64::from(state.gamma);
        match &self.books {
            Books::Coordinate(book) => {
                if state.indices.len() != self.cfg.dim {
                    return format("baseline state has the wrong number of indices");
                }
                let mut acc = 0.0;
                for (&qi, &i) in q.rotated.iter().zip(&state.indices) {
                    acc += qi * book.dequantize(i.into()).map_err(|e| crate::Error::Format(e.to_string()))?;
                }
                Ok(g * acc)
            }
            Books::Polar(_) => {
                let u = self.reconstruct_rotated(state)?;
                Ok(g * q.rotated.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>())
            }
        }
    }

    /// The codec's own inner-product estimator (residual-corrected for `tq_qjl`).
    pub fn score_prepared(&self, q: &BaselineQuery, state: &BaselineState) -> Result<f64> {
        let base = self.score_uncorrected(q, state)?;
        Ok(match (&self.qjl, &q.projected, &state.qjl) {
            (Some(sketch), Some(p), Some(side)) => base + f64::from(state.gamma) * sketch.estimate(p, side),
            _ => base,
        })
    }

    pub fn score(&self, q: &[f64], state: &BaselineState) -> Result<f64> {
        self.score_prepared(&self.prepare_query(q)?, state)
    }
}
