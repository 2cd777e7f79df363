//! Wire layout for compressed keys (little-endian):
//!
//! ```text
//! header: "OCTO" | version u8 = 1 | flags u8 (bit0 = residual sketch)
//!         | b_dir u8 | b_nrm u8 | dim u32 | key_count u64
//! per key: γ f32 | dir stream ceil(2·n_tri·b_dir / 8) B
//!          | nrm stream ceil(n_tri·b_nrm / 8) B
//!          | [γ_r f16 | ceil(dim / 8) sign bytes]
//! ```
//!
//! Each stream is byte aligned so any key can be located in O(1).

use half::f16;

use super::bits::{pack_values, packed_len, unpack_values};
use super::config::CodecConfig;
use super::octopus::CompressedKey;
use super::qjl::{validate_sidecar, QjlSidecar};
use crate::error::{format, invalid, Result};

pub const STREAM_MAGIC: &[u8; 4] = b"OCTO";
pub const STREAM_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;
const FLAG_QJL: u8 = 1;

/// Parsed stream header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub qjl: bool,
    pub b_dir: u8,
    pub b_nrm: u8,
    pub dim: u32,
    pub key_count: u64,
}

impl StreamHeader {
    pub fn for_config(cfg: &CodecConfig, key_count: u64) -> Self {
        Self { qjl: cfg.qjl, b_dir: cfg.b_dir, b_nrm: cfg.b_nrm, dim: cfg.dim as u32, key_count }
    }

    fn n_tri(&self) -> usize {
        (self.dim as usize).div_ceil(3)
    }

    pub fn dir_bytes(&self) -> usize {
        packed_len(2 * self.n_tri(), self.b_dir.into())
    }

    pub fn nrm_bytes(&self) -> usize {
        packed_len(self.n_tri(), self.b_nrm.into())
    }

    /// Bytes per key, including γ and the optional sidecar.
    pub fn key_bytes(&self) -> usize {
        let mut n = 4 + self.dir_bytes() + self.nrm_bytes();
        if self.qjl {
            n += 2 + (self.dim as usize).div_ceil(8);
        }
        n
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(STREAM_MAGIC);
        out[4] = STREAM_VERSION;
        out[5] = if self.qjl { FLAG_QJL } else { 0 };
        out[6] = self.b_dir;
        out[7] = self.b_nrm;
        out[8..12].copy_from_slice(&self.dim.to_le_bytes());
        out[12..20].copy_from_slice(&self.key_count.to_le_bytes());
        out
    }

    pub fn parse(blob: &[u8]) -> Result<Self> {
        if blob.len() < HEADER_LEN {
            return format("stream shorter than its header");
        }
        if &blob[0..4] != STREAM_MAGIC {
            return format("bad stream magic");
        }
        if blob[4] != STREAM_VERSION {
            return format(format!("unsupported stream version {}", blob[4]));
        }
        if blob[5] & !FLAG_QJL != 0 {
            return format(format!("unknown stream flags {:#04x}", blob[5]));
        }
        let h = Self {
            qjl: blob[5] & FLAG_QJL != 0,
            b_dir: blob[6],
            b_nrm: blob[7],
            dim: u32::from_le_bytes(blob[8..12].try_into().unwrap()),
            key_count: u64::from_le_bytes(blob[12..20].try_into().unwrap()),
        };
        if !(1..=8).contains(&h.b_dir) || !(1..=8).contains(&h.b_nrm) {
            return format("bit widths outside [1, 8]");
        }
        if h.dim < 2 || !h.dim.is_power_of_two() {
            return format(format!("stream dimension {} is not a power of two", h.dim));
        }
        Ok(h)
    }

    /// Whether keys in this stream can be decoded by a codec built from `cfg`.
    pub fn matches(&self, cfg: &CodecConfig) -> bool {
        self.qjl == cfg.qjl && self.b_dir == cfg.b_dir && self.b_nrm == cfg.b_nrm && self.dim as usize == cfg.dim
    }
}

/// Bytes of one packed key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBlob(pub Vec<u8>);

fn check_key(h: &StreamHeader, ck: &CompressedKey) -> Result<()> {
    let n_tri = h.n_tri();
    if ck.dir.len() != 2 * n_tri || ck.nrm.len() != n_tri {
        return invalid("compressed key does not match the stream layout");
    }
    if ck.dir.iter().any(|&i| u32::from(i) >> h.b_dir != 0) || ck.nrm.iter().any(|&i| u32::from(i) >> h.b_nrm != 0) {
        return invalid("index does not fit its bit width");
    }
    if ck.qjl.is_some() != h.qjl {
        return invalid("residual sidecar presence does not match the stream flags");
    }
    Ok(())
}

fn write_key(h: &StreamHeader, ck: &CompressedKey, out: &mut Vec<u8>) -> Result<()> {
    check_key(h, ck)?;
    out.extend_from_slice(&ck.gamma.to_le_bytes());
    out.extend(pack_values(ck.dir.iter().map(|&i| u32::from(i)), h.b_dir.into()));
    out.extend(pack_values(ck.nrm.iter().map(|&i| u32::from(i)), h.b_nrm.into()));
    if let Some(side) = &ck.qjl {
        validate_sidecar(side, h.dim as usize).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        out.extend_from_slice(&side.gamma_r.to_bits().to_le_bytes());
        out.extend_from_slice(&side.signs);
    }
    Ok(())
}

fn read_key(h: &StreamHeader, bytes: &[u8]) -> Result<CompressedKey> {
    debug_assert_eq!(bytes.len(), h.key_bytes());
    let gamma = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if !gamma.is_finite() || gamma.is_sign_negative() {
        return format("key norm must be finite and non-negative");
    }
    let mut pos = 4;
    let dir_end = pos + h.dir_bytes();
    let dir = unpack_values(&bytes[pos..dir_end], 2 * h.n_tri(), h.b_dir.into())?;
    pos = dir_end;
    let nrm_end = pos + h.nrm_bytes();
    let nrm = unpack_values(&bytes[pos..nrm_end], h.n_tri(), h.b_nrm.into())?;
    pos = nrm_end;
    let qjl = if h.qjl {
        let gamma_r = f16::from_bits(u16::from_le_bytes(bytes[pos..pos + 2].try_into().unwrap()));
        let side = QjlSidecar { gamma_r, signs: bytes[pos + 2..].to_vec() };
        validate_sidecar(&side, h.dim as usize)?;
        Some(side)
    } else {
        None
    };
    Ok(CompressedKey {
        gamma,
        dir: dir.into_iter().map(|i| i as u8).collect(),
        nrm: nrm.into_iter().map(|i| i as u8).collect(),
        qjl,
    })
}

/// Packs a single key (header with `key_count = 1`).
pub fn pack(cfg: &CodecConfig, ck: &CompressedKey) -> Result<PackedBlob> {
    pack_keys(cfg, std::slice::from_ref(ck)).map(PackedBlob)
}

/// Unpacks a single-key blob written for `cfg`.
pub fn unpack(cfg: &CodecConfig, blob: &PackedBlob) -> Result<CompressedKey> {
    let (h, mut keys) = unpack_keys(&blob.0)?;
    if !h.matches(cfg) {
        return format("stream header does not match the codec configuration");
    }
    if keys.len() != 1 {
        return format(format!("expected one key, found {}", keys.len()));
    }
    Ok(keys.pop().unwrap())
}

pub fn pack_keys(cfg: &CodecConfig, keys: &[CompressedKey]) -> Result<Vec<u8>> {
    let h = StreamHeader::for_config(cfg, keys.len() as u64);
    let mut out = Vec::with_capacity(HEADER_LEN + keys.len() * h.key_bytes());
    out.extend_from_slice(&h.to_bytes());
    for ck in keys {
        write_key(&h, ck, &mut out)?;
    }
    Ok(out)
}

pub fn unpack_keys(blob: &[u8]) -> Result<(StreamHeader, Vec<CompressedKey>)> {
    let h = StreamHeader::parse(blob)?;
    let per_key = h.key_bytes();
    let body = &blob[HEADER_LEN..];
    let expected = (h.key_count as u128) * per_key as u128;
    if body.len() as u128 != expected {
        return format(format!("stream body has {} bytes, expected {expected}", body.len()));
    }
    let keys = body.chunks_exact(per_key).map(|b| read_key(&h, b)).collect::<Result<Vec<_>>>()?;
    Ok((h, keys))
}

/// Random access to key `index` of a packed stream.
pub fn key_at(blob: &[u8], index: u64) -> Result<CompressedKey> {
    let h = StreamHeader::parse(blob)?;
    if index >= h.key_count {
        return invalid(format!("key {index} out of range for {} keys", h.key_count));
    }
    let per_key = h.key_bytes();
    let start = HEADER_LEN + index as usize * per_key;
    match blob.get(start..start + per_key) {
        Some(bytes) => read_key(&h, bytes),
        None => format("stream truncated"),
    }
}
