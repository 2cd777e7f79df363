//! Baseline states use the same layout idea as the main codec stream:
//!
//! ```text
//! header: "OCTB" | version u8 = 1 | kind u8 | bits u8 | reserved u8 = 0
//!         | dim u32 | key_count u64
//! per key: γ f32 | index stream ceil(count·index_bits / 8) B
//!          | tq_qjl only: γ_r f16 | ceil(dim / 8) sign bytes
//! ```

use half::f16;

use super::{BaselineConfig, BaselineKind, BaselineState};
use crate::codec::bits::{pack_values, packed_len, unpack_values};
use crate::codec::qjl::validate_sidecar;
use crate::codec::QjlSidecar;
use crate::error::{format, invalid, Result};

pub const BASELINE_MAGIC: &[u8; 4] = b"OCTB";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineHeader {
    pub kind: BaselineKind,
    pub bits: u8,
    pub dim: u32,
    pub key_count: u64,
}

impl BaselineHeader {
    fn config(&self) -> Result<BaselineConfig> {
        let cfg = BaselineConfig { kind: self.kind, dim: self.dim as usize, bits: self.bits, rotation_seed: 0, qjl_seed: 1 };
        cfg.validate().map_err(|e| crate::Error::Format(e.to_string()))?;
        Ok(cfg)
    }
}

fn key_bytes(cfg: &BaselineConfig) -> usize {
    let mut n = 4 + packed_len(cfg.index_count(), cfg.index_bits().into());
    if cfg.kind == BaselineKind::TqQjl {
        n += 2 + cfg.dim.div_ceil(8);
    }
    n
}

pub fn pack_baseline_keys(cfg: &BaselineConfig, states: &[BaselineState]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + states.len() * key_bytes(cfg));
    out.extend_from_slice(BASELINE_MAGIC);
    out.extend_from_slice(&[VERSION, cfg.kind.code(), cfg.bits, 0]);
    out.extend_from_slice(&(cfg.dim as u32).to_le_bytes());
    out.extend_from_slice(&(states.len() as u64).to_le_bytes());
    let bits = u32::from(cfg.index_bits());
    for st in states {
        if st.indices.len() != cfg.index_count() || st.indices.iter().any(|&i| u32::from(i) >> bits != 0) {
            return invalid("baseline state does not match its configuration");
        }
        if st.qjl.is_some() != (cfg.kind == BaselineKind::TqQjl) {
            return invalid("residual sidecar presence does not match the baseline kind");
        }
        out.extend_from_slice(&st.gamma.to_le_bytes());
        out.extend(pack_values(st.indices.iter().map(|&i| u32::from(i)), bits));
        if let Some(side) = &st.qjl {
            out.extend_from_slice(&side.gamma_r.to_bits().to_le_bytes());
            out.extend_from_slice(&side.signs);
        }
    }
    Ok(out)
}

pub fn unpack_baseline_keys(blob: &[u8]) -> Result<(BaselineHeader, Vec<BaselineState>)> {
    if blob.len() < HEADER_LEN || &blob[0..4] != BASELINE_MAGIC {
        return format("bad baseline stream header");
    }
    if blob[4] != VERSION || blob[7] != 0 {
        return format("unsupported baseline stream version");
    }
    let kind = BaselineKind::from_code(blob[5]).ok_or_else(|| crate::Error::Format("unknown baseline kind".into()))?;
    let header = BaselineHeader {
        kind,
        bits: blob[6],
        dim: u32::from_le_bytes(blob[8..12].try_into().unwrap()),
        key_count: u64::from_le_bytes(blob[12..20].try_into().unwrap()),
    };
    let cfg = header.config()?;
    let per_key = key_bytes(&cfg);
    let body = &blob[HEADER_LEN..];
    if body.len() as u128 != header.key_count as u128 * per_key as u128 {
        return format("baseline stream length does not match its key count");
    }
    let idx_len = packed_len(cfg.index_count(), cfg.index_bits().into());
    let states = body
        .chunks_exact(per_key)
        .map(|b| {
            let gamma = f32::from_le_bytes(b[0..4].try_into().unwrap());
            if !gamma.is_finite() || gamma.is_sign_negative() {
                return format("key norm must be finite and non-negative");
            }
            let indices = unpack_values(&b[4..4 + idx_len], cfg.index_count(), cfg.index_bits().into())?
                .into_iter()
                .map(|i| i as u8)
                .collect();
            let qjl = if kind == BaselineKind::TqQjl {
                let p = 4 + idx_len;
                let side = QjlSidecar {
                    gamma_r: f16::from_bits(u16::from_le_bytes(b[p..p + 2].try_into().unwrap())),
                    signs: b[p + 2..].to_vec(),
                };
                validate_sidecar(&side, cfg.dim)?;
                Some(side)
            } else {
                None
            };
            Ok(BaselineState { gamma, indices, qjl })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, states))
}
