use serde::Serialize;

use super::any::{AnyCodec, CodecId};
use crate::Result;

/// Cosine similarity; two zero vectors count as identical.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 && bb == 0.0 {
        return 1.0;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

/// Nearest-rank percentile: the `ceil(p·n)`-th smallest value.
pub fn nearest_rank(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Metrics of one codec on one seed's draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMetrics {
    pub cos: f64,
    pub mse: f64,
    /// NaN when no queries were scored.
    pub ip_abs_err: f64,
    /// Per-key `‖k − k̂‖² / d`, kept for tail percentiles.
    pub key_sq_errors: Vec<f64>,
}

pub fn metric_suite(keys: &[Vec<f64>], queries: &[Vec<f64>], codec: &AnyCodec) -> Result<SeedMetrics> {
    let dim = codec.dim() as f64;
    let states = keys.iter().map(|k| codec.encode(k)).collect::<Result<Vec<_>>>()?;
    let (mut cos, mut mse) = (0.0, 0.0);
    let mut key_sq_errors = Vec::with_capacity(keys.len());
    for (k, st) in keys.iter().zip(&states) {
        let k_hat = codec.decode(st)?;
        let e: f64 = k.iter().zip(&k_hat).map(|(a, b)| (a - b) * (a - b)).sum();
        cos += cosine(k, &k_hat);
        mse += e / dim;
        key_sq_errors.push(e / dim);
    }
    let mut ip = 0.0;
    for q in queries {
        let pq = codec.prepare_query(q)?;
        for (k, st) in keys.iter().zip(&states) {
            let exact: f64 = q.iter().zip(k).map(|(a, b)| a * b).sum();
            ip += (exact - codec.score(&pq, st)).abs();
        }
    }
    let n = keys.len() as f64;
    Ok(SeedMetrics {
        cos: cos / n,
        mse: mse / n,
        ip_abs_err: if queries.is_empty() { f64::NAN } else { ip / (n * queries.len() as f64) },
        key_sq_errors,
    })
}

/// One row of any experiment table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub experiment: String,
    pub codec: CodecId,
    pub bits: u8,
    pub b_dir: Option<u8>,
    pub b_nrm: Option<u8>,
    pub rounding: Option<String>,
    pub seeds: usize,
    pub cos: Option<f64>,
    pub cos_se: Option<f64>,
    pub mse: Option<f64>,
    pub mse_se: Option<f64>,
    pub ip_abs_err: Option<f64>,
    pub ip_se: Option<f64>,
    pub tail95: Option<f64>,
    pub softmax_mass: Option<f64>,
    pub mass_se: Option<f64>,
    pub delta_mse_pct: Option<f64>,
}

impl MetricRow {
    pub fn new(experiment: &str, codec: CodecId, bits: u8) -> Self {
        Self {
            experiment: experiment.to_string(),
            codec,
            bits,
            b_dir: None,
            b_nrm: None,
            rounding: None,
            seeds: 0,
            cos: None,
            cos_se: None,
            mse: None,
            mse_se: None,
            ip_abs_err: None,
            ip_se: None,
            tail95: None,
            softmax_mass: None,
            mass_se: None,
            delta_mse_pct: None,
        }
    }

    /// Fills the reconstruction and IP columns from per-seed results.
    pub fn with_seed_metrics(mut self, per_seed: &[SeedMetrics]) -> Self {
        let (c, cs) = mean_se(per_seed.iter().map(|m| m.cos));
        let (m, ms) = mean_se(per_seed.iter().map(|m| m.mse));
        let (i, is) = mean_se(per_seed.iter().map(|m| m.ip_abs_err));
        let pooled: Vec<f64> = per_seed.iter().flat_map(|m| m.key_sq_errors.iter().copied()).collect();
        self.seeds = per_seed.len();
        self.cos = Some(c);
        self.cos_se = Some(cs);
        self.mse = Some(m);
        self.mse_se = Some(ms);
        if !i.is_nan() {
            self.ip_abs_err = Some(i);
            self.ip_se = Some(is);
        }
        self.tail95 = Some(nearest_rank(&pooled, 0.95));
        self
    }

    pub fn with_mass(mut self, per_seed: &[f64]) -> Self {
        let (m, s) = mean_se(per_seed.iter().copied());
        self.seeds = per_seed.len();
        self.softmax_mass = Some(m);
        self.mass_se = Some(s);
        self
    }

    pub fn with_split(mut self, b_dir: u8, b_nrm: u8) -> Self {
        self.b_dir = Some(b_dir);
        self.b_nrm = Some(b_nrm);
        self
    }
}

/// Mean and standard error of the mean (zero for a single value).
pub(crate) fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
