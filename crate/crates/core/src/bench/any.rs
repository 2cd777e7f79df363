use std::fmt;

use serde::Serialize;

use crate::baselines::{BaselineCodec, BaselineConfig, BaselineKind, BaselineQuery, BaselineState};
use crate::codec::{CodecConfig, CompressedKey, OctopusCodec, PreparedQuery, Rounding};
use crate::error::invalid;
use crate::Result;

/// Codec identifiers accepted on the command line and written to reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "&'static str")]
pub enum CodecId {
    Fp32,
    Octopus,
    OctopusQjl,
    TqMse,
    TqQjl,
    Polar,
}

impl CodecId {
    pub const ALL: [CodecId; 6] =
        [CodecId::Fp32, CodecId::Octopus, CodecId::OctopusQjl, CodecId::TqMse, CodecId::TqQjl, CodecId::Polar];

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Fp32 => "fp32",
            CodecId::Octopus => "octopus",
            CodecId::OctopusQjl => "octopus-qjl",
            CodecId::TqMse => "tq-mse",
            CodecId::TqQjl => "tq-qjl",
            CodecId::Polar => "polar",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match Self::ALL.into_iter().find(|c| c.name() == s) {
            Some(c) => Ok(c),
            None => invalid(format!(
                "unknown codec '{s}' (expected one of {})",
                Self::ALL.map(CodecId::name).join(", ")
            )),
        }
    }
}

impl From<CodecId> for &'static str {
    fn from(c: CodecId) -> Self {
        c.name()
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A codec of any kind behind one interface.
#[derive(Debug, Clone)]
pub enum AnyCodec {
    Identity { dim: usize },
    Octopus(OctopusCodec),
    Baseline(BaselineCodec),
}

#[derive(Debug, Clone)]
pub enum AnyState {
    Raw(Vec<f64>),
    Octopus(CompressedKey),
    Baseline(BaselineState),
}

#[derive(Debug, Clone)]
pub enum AnyQuery {
    Raw(Vec<f64>),
    Octopus(PreparedQuery),
    Baseline(BaselineQuery),
}

impl AnyCodec {
    /// Builds `id` at nominal `bits` with the given seeds. OCTOPUS codecs use
    /// the default `(b+1, b-1)` split.
    pub fn build(id: CodecId, dim: usize, bits: u8, rounding: Rounding, rotation_seed: u64, qjl_seed: u64) -> Result<Self> {
        let baseline = |kind| -> Result<Self> {
            let cfg = BaselineConfig::new(kind, dim, bits)?.with_seeds(rotation_seed, qjl_seed);
            cfg.validate()?;
            Ok(AnyCodec::Baseline(BaselineCodec::standard(cfg)?))
        };
        match id {
            CodecId::Fp32 => Ok(AnyCodec::Identity { dim }),
            CodecId::Octopus | CodecId::OctopusQjl => {
                let mut cfg = CodecConfig::nominal(dim, bits)?.with_rounding(rounding).with_seed(rotation_seed);
                if id == CodecId::OctopusQjl {
                    cfg = cfg.with_qjl(qjl_seed);
                }
                Self::octopus(cfg)
            }
            CodecId::TqMse => baseline(BaselineKind::TqMse),
            CodecId::TqQjl => baseline(BaselineKind::TqQjl),
            CodecId::Polar => baseline(BaselineKind::Polar),
        }
    }

    pub fn octopus(cfg: CodecConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(AnyCodec::Octopus(OctopusCodec::standard(cfg)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyCodec::Identity { dim } => *dim,
            AnyCodec::Octopus(c) => c.config().dim,
            AnyCodec::Baseline(c) => c.config().dim,
        }
    }

    pub fn encode(&self, k: &[f64]) -> Result<AnyState> {
        match self {
            AnyCodec::Identity { dim } => {
                if k.len() != *dim {
                    return invalid("vector length does not match codec dim");
                }
                Ok(AnyState::Raw(k.to_vec()))
            }
            AnyCodec::Octopus(c) => Ok(AnyState::Octopus(c.encode(k)?)),
            AnyCodec::Baseline(c) => Ok(AnyState::Baseline(c.encode(k)?)),
        }
    }

    pub fn decode(&self, st: &AnyState) -> Result<Vec<f64>> {
        match (self, st) {
            (AnyCodec::Identity { .. }, AnyState::Raw(k)) => Ok(k.clone()),
            (AnyCodec::Octopus(c), AnyState::Octopus(s)) => c.decode(s),
            (AnyCodec::Baseline(c), AnyState::Baseline(s)) => c.decode(s),
            _ => invalid("state does not belong to this codec"),
        }
    }

    pub fn prepare_query(&self, q: &[f64]) -> Result<AnyQuery> {
        match self {
            AnyCodec::Identity { .. } => Ok(AnyQuery::Raw(q.to_vec())),
            AnyCodec::Octopus(c) => Ok(AnyQuery::Octopus(c.prepare_query(q)?)),
            AnyCodec::Baseline(c) => Ok(AnyQuery::Baseline(c.prepare_query(q)?)),
        }
    }

    /// The codec's own inner-product estimate. Panics on mismatched
    /// query/state kinds, which only a programming error can produce.
    pub fn score(&self, q: &AnyQuery, st: &AnyState) -> f64 {
        match (self, q, st) {
            (AnyCodec::Identity { .. }, AnyQuery::Raw(q), AnyState::Raw(k)) => q.iter().zip(k).map(|(a, b)| a * b).sum(),
            (AnyCodec::Octopus(c), AnyQuery::Octopus(q), AnyState::Octopus(s)) => c.score_prepared(q, s),
            (AnyCodec::Baseline(c), AnyQuery::Baseline(q), AnyState::Baseline(s)) => {
                c.score_prepared(q, s).expect("baseline state validated at encode")
            }
            _ => panic!("query, state and codec kinds differ"),
        }
    }
}
