//! Codebook file format (little-endian):
//!
//! ```text
//! "OCBK" | version u8 = 1 | kind u8 | bits u8 | reserved u8 = 0 | dim u32
//! | lo f64 | hi f64 | 2^bits centroids as f32
//! ```
//!
//! Boundaries are not stored; they are recomputed from the (rounded)
//! centroids on load.

use std::path::Path;

use super::codebook::{Codebook, CodebookKind};
use crate::error::{format, Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 4] = b"OCBK";
pub const CODEBOOK_VERSION: u8 = 1;
const HEADER_LEN: usize = 28;

pub fn serialize_codebook(cb: &Codebook) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * cb.len());
    out.extend_from_slice(CODEBOOK_MAGIC);
    out.push(CODEBOOK_VERSION);
    out.push(cb.kind().code());
    out.push(cb.bits());
    out.push(0);
    out.extend_from_slice(&cb.dim().to_le_bytes());
    let (lo, hi) = cb.domain();
    out.extend_from_slice(&lo.to_le_bytes());
    out.extend_from_slice(&hi.to_le_bytes());
    for &c in cb.centroids() {
        out.extend_from_slice(&(c as f32).to_le_bytes());
    }
    out
}

pub fn deserialize_codebook(blob: &[u8]) -> Result<Codebook> {
    if blob.len() < HEADER_LEN {
        return format(format!("codebook blob of {} bytes is shorter than its header", blob.len()));
    }
    if &blob[0..4] != CODEBOOK_MAGIC {
        return format("bad codebook magic");
    }
    if blob[4] != CODEBOOK_VERSION {
        return format(format!("unsupported codebook version {}", blob[4]));
    }
    let kind = CodebookKind::from_code(blob[5]).ok_or_else(|| Error::Format(format!("unknown codebook kind {}", blob[5])))?;
    let bits = blob[6];
    if !(1..=8).contains(&bits) {
        return format(format!("codebook bits {bits} outside [1, 8]"));
    }
    if blob[7] != 0 {
        return format("reserved codebook byte is not zero");
    }
    let dim = u32::from_le_bytes(blob[8..12].try_into().unwrap());
    let lo = f64::from_le_bytes(blob[12..20].try_into().unwrap());
    let hi = f64::from_le_bytes(blob[20..28].try_into().unwrap());
    let count = 1usize << bits;
    if blob.len() != HEADER_LEN + 4 * count {
        return format(format!("codebook blob has {} bytes, expected {}", blob.len(), HEADER_LEN + 4 * count));
    }
    let centroids = blob[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Codebook::new(kind, bits, dim, (lo, hi), centroids).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_codebook(path: &Path, cb: &Codebook) -> std::io::Result<()> {
    std::fs::write(path, serialize_codebook(cb))
}

pub fn read_codebook(path: &Path) -> anyhow::Result<Codebook> {
    let blob = std::fs::read(path)?;
    Ok(deserialize_codebook(&blob)?)
}
