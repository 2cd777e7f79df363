//! The default codebooks used by the codec and the baselines, trained on
//! first use and cached for the life of the process.
//!
//! * ξ/η books come from 2²² empirical octahedral coordinates (both
//!   coordinates of 2²¹ uniform directions, seed `0xC0DEB00C`), then made
//!   exactly odd-symmetric like the marginal they estimate. Sampling noise
//!   otherwise tilts mirrored candidates across the fold seam.
//! * ρ books come from the analytic triplet-norm density.
//! * Rotated-coordinate books come from the analytic coordinate density.
//!
//! Centroids are rounded to `f32`, so a cached book equals its file form.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::codebook::{Codebook, CodebookKind};
use super::train::{train_from_density, train_from_sorted, SortedSamples, TrainOptions};
use crate::error::Result;
use crate::marginals::{sample_oct_coordinates, DensityKind, DensitySpec};
use crate::rng::{streams, SampleStream};

pub const XI_TRAINING_SEED: u64 = 0xC0DE_B00C;
pub const XI_TRAINING_DIRECTIONS: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Xi(u8),
    Rho(u32, u8),
    Coord(u32, u8),
    Polar(u32, u8),
    Uniform(u64, u64, u8),
}

fn cache() -> &'static Mutex<HashMap<Key, Arc<Codebook>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<Codebook>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: Key, build: impl FnOnce() -> Result<Codebook>) -> Result<Arc<Codebook>> {
    if let Some(cb) = cache().lock().unwrap().get(&key) {
        return Ok(cb.clone());
    }
    // Trained outside the lock; concurrent first requests may both train,
    // which is harmless because training is deterministic.
    let cb = Arc::new(build()?.rounded_to_f32()?);
    Ok(cache().lock().unwrap().entry(key).or_insert(cb).clone())
}

/// The sorted empirical octahedral-coordinate sample behind every ξ book.
pub fn oct_training_samples() -> &'static SortedSamples {
    static SAMPLES: OnceLock<SortedSamples> = OnceLock::new();
    SAMPLES.get_or_init(|| {
        let stream = SampleStream::new(XI_TRAINING_SEED, streams::SPHERE);
        SortedSamples::new(sample_oct_coordinates(&stream, XI_TRAINING_DIRECTIONS))
            .expect("octahedral samples are finite")
    })
}

/// Shared ξ/η codebook for `bits` bits per octahedral coordinate.
pub fn xi_codebook(bits: u8) -> Result<Arc<Codebook>> {
    cached(Key::Xi(bits), || {
        let opts = TrainOptions { domain: Some((-1.0, 1.0)), ..TrainOptions::tagged(CodebookKind::OctCoordinate, 0) };
        train_from_sorted(oct_training_samples(), bits, &opts)?.0.symmetrized()
    })
}

/// Triplet-norm codebook for dimension `dim`.
pub fn rho_codebook(dim: usize, bits: u8) -> Result<Arc<Codebook>> {
    cached(Key::Rho(dim as u32, bits), || {
        let density = DensitySpec::new(DensityKind::TripletNorm { dim })?;
        train_from_density(&density, bits, &TrainOptions::tagged(CodebookKind::TripletNorm, dim as u32))
    })
}

/// Per-coordinate codebook for rotated unit vectors of dimension `dim`.
pub fn coord_codebook(dim: usize, bits: u8) -> Result<Arc<Codebook>> {
    cached(Key::Coord(dim as u32, bits), || {
        let density = DensitySpec::new(DensityKind::RotatedCoordinate { dim })?;
        train_from_density(&density, bits, &TrainOptions::tagged(CodebookKind::RotatedCoordinate, dim as u32))
    })
}

/// Codebook for the polar split angle between halves of `half` coordinates.
pub fn polar_angle_codebook(half: usize, bits: u8) -> Result<Arc<Codebook>> {
    cached(Key::Polar(half as u32, bits), || {
        let density = DensitySpec::new(DensityKind::PolarAngle { half })?;
        train_from_density(&density, bits, &TrainOptions::tagged(CodebookKind::Custom, half as u32))
    })
}

/// Codebook for a uniform source on `[lo, hi]`.
pub fn uniform_codebook(lo: f64, hi: f64, bits: u8) -> Result<Arc<Codebook>> {
    cached(Key::Uniform(lo.to_bits(), hi.to_bits(), bits), || {
        let density = DensitySpec::new(DensityKind::Uniform { lo, hi })?;
        train_from_density(&density, bits, &TrainOptions::default())
    })
}

/// The (C_ξ, C_ρ) pair the codec needs.
#[derive(Debug, Clone)]
pub struct CodebookPair {
    pub xi: Arc<Codebook>,
    pub rho: Arc<Codebook>,
}

impl CodebookPair {
    pub fn standard(dim: usize, b_dir: u8, b_nrm: u8) -> Result<Self> {
        Ok(Self { xi: xi_codebook(b_dir)?, rho: rho_codebook(dim, b_nrm)? })
    }
}
