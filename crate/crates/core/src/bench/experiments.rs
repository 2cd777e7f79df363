use rayon::prelude::*;

use super::any::{AnyCodec, CodecId};
use super::metrics::{metric_suite, MetricRow, SeedMetrics};
use crate::codec::{default_bit_split, CodecConfig, Rounding};
use crate::error::invalid;
use crate::rng::{splitmix64, streams, SampleStream};
use crate::Result;

/// Rotation and residual-projection seeds used for trial `seed`.
pub fn trial_seeds(seed: u64) -> (u64, u64) {
    let rot = splitmix64(seed ^ 0x524F_5441_5445);
    let mut qjl = splitmix64(seed ^ 0x514A_4C00);
    if qjl == rot {
        qjl = qjl.wrapping_add(1);
    }
    (rot, qjl)
}

fn trial_draws(base_seed: u64, seed: u64, dim: usize, n_keys: usize, n_queries: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let keys = SampleStream::new(base_seed, streams::KEYS).child(seed).gaussian_matrix(n_keys, dim);
    let queries = SampleStream::new(base_seed, streams::QUERIES).child(seed).gaussian_matrix(n_queries, dim);
    (keys, queries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProbeConfig {
    pub dim: usize,
    pub n_keys: usize,
    pub n_queries: usize,
    pub n_seeds: usize,
    pub codecs: Vec<CodecId>,
    pub bits: Vec<u8>,
    /// Direction search used by the OCTOPUS rows.
    pub rounding: Rounding,
    pub base_seed: u64,
}

impl Default for SyntheticProbeConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            n_keys: 1024,
            n_queries: 16,
            n_seeds: 64,
            codecs: vec![CodecId::Octopus, CodecId::OctopusQjl, CodecId::TqMse, CodecId::TqQjl, CodecId::Polar],
            bits: vec![2, 3, 4],
            rounding: Rounding::Scalar,
            base_seed: 0,
        }
    }
}

impl SyntheticProbeConfig {
    fn validate(&self) -> Result<()> {
        if self.n_keys == 0 || self.n_queries == 0 || self.n_seeds == 0 || self.codecs.is_empty() || self.bits.is_empty() {
            return invalid("synthetic probe counts must be positive");
        }
        // Surface bad codec/bit combinations before spending any time.
        for &c in &self.codecs {
            for &b in &self.bits {
                AnyCodec::build(c, self.dim, b, self.rounding, 0, 1)?;
            }
        }
        Ok(())
    }
}

/// Runs every codec × bit cell on shared per-seed draws. Rows are ordered
/// by bits, then by the configured codec order.
pub fn run_table1(cfg: &SyntheticProbeConfig) -> Result<Vec<MetricRow>> {
    cfg.validate()?;
    let cells: Vec<(u8, CodecId)> = cfg.bits.iter().flat_map(|&b| cfg.codecs.iter().map(move |&c| (b, c))).collect();
    let per_seed: Vec<Vec<SeedMetrics>> = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let (keys, queries) = trial_draws(cfg.base_seed, s, cfg.dim, cfg.n_keys, cfg.n_queries);
            let (rot, qjl) = trial_seeds(cfg.base_seed.wrapping_add(s));
            cells
                .iter()
                .map(|&(b, c)| metric_suite(&keys, &queries, &AnyCodec::build(c, cfg.dim, b, cfg.rounding, rot, qjl)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(j, &(b, c))| {
            let metrics: Vec<SeedMetrics> = per_seed.iter().map(|row| row[j].clone()).collect();
            let mut row = MetricRow::new("table1", c, b).with_seed_metrics(&metrics);
            if matches!(c, CodecId::Octopus | CodecId::OctopusQjl) {
                let (d, n) = default_bit_split(b).expect("validated");
                row = row.with_split(d, n);
                row.rounding = Some(cfg.rounding.name().to_string());
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeedleConfig {
    pub dim: usize,
    pub distractors: usize,
    pub noise_fraction: f64,
    pub n_seeds: usize,
    pub rounding: Rounding,
    /// Rescale the planted key to norm `√dim` (its expected norm) instead
    /// of keeping the raw Gaussian draw. Distractors are never rescaled.
    pub normalize_needle: bool,
    pub base_seed: u64,
}

impl Default for NeedleConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            distractors: 2048,
            noise_fraction: 0.10,
            n_seeds: 128,
            rounding: Rounding::Local3x3,
            normalize_needle: true,
            base_seed: 0,
        }
    }
}

/// Mean softmax mass that `codec` at `bits` places on a planted key.
pub fn run_needle(cfg: &NeedleConfig, codec: CodecId, bits: u8) -> Result<MetricRow> {
    if !(0.0..1.0).contains(&cfg.noise_fraction) {
        return invalid(format!("noise fraction {} outside [0, 1)", cfg.noise_fraction));
    }
    if cfg.distractors == 0 || cfg.n_seeds == 0 {
        return invalid("needle run needs at least one distractor and one seed");
    }
    AnyCodec::build(codec, cfg.dim, bits, cfg.rounding, 0, 1)?;
    let scale = 1.0 / (cfg.dim as f64).sqrt();
    let masses: Vec<f64> = (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let (rot, qjl) = trial_seeds(cfg.base_seed.wrapping_add(s));
            let c = AnyCodec::build(codec, cfg.dim, bits, cfg.rounding, rot, qjl)?;
            let mut keys =
                SampleStream::new(cfg.base_seed, streams::KEYS).child(s).gaussian_matrix(cfg.distractors + 1, cfg.dim);
            let g = SampleStream::new(cfg.base_seed, streams::NOISE).child(s).gaussian_vec(0, cfg.dim);
            let mut k_norm = keys[0].iter().map(|x| x * x).sum::<f64>().sqrt();
            if cfg.normalize_needle && k_norm > 0.0 {
                let target = (cfg.dim as f64).sqrt();
                keys[0].iter_mut().for_each(|x| *x *= target / k_norm);
                k_norm = target;
            }
            let needle = &keys[0];
            let g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let q: Vec<f64> = needle.iter().zip(&g).map(|(k, e)| k + cfg.noise_fraction * k_norm * e / g_norm).collect();
            let pq = c.prepare_query(&q)?;
            let logits = keys.iter().map(|k| Ok(c.score(&pq, &c.encode(k)?) * scale)).collect::<Result<Vec<f64>>>()?;
            Ok(crate::codec::softmax(&logits)[0])
        })
        .collect::<Result<_>>()?;
    let mut row = MetricRow::new("needle", codec, bits).with_mass(&masses);
    if matches!(codec, CodecId::Octopus | CodecId::OctopusQjl) {
        let (d, n) = default_bit_split(bits)?;
        row = row.with_split(d, n);
        row.rounding = Some(cfg.rounding.name().to_string());
    }
    Ok(row)
}

/// Shared settings of the bit-split sweep and the rounding ablation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dim: usize,
    pub n_keys: usize,
    pub n_queries: usize,
    pub n_seeds: usize,
    pub bits: Vec<u8>,
    pub rounding: Rounding,
    pub base_seed: u64,
}

impl SweepConfig {
    pub fn bitsplit() -> Self {
        Self { dim: 128, n_keys: 8192, n_queries: 0, n_seeds: 4, bits: vec![2, 3, 4], rounding: Rounding::Local3x3, base_seed: 0 }
    }

    pub fn rounding() -> Self {
        Self { dim: 128, n_keys: 4096, n_queries: 64, n_seeds: 5, bits: vec![1, 2, 3, 4], rounding: Rounding::Local3x3, base_seed: 0 }
    }
}

fn octopus_cell(cfg: &SweepConfig, b_dir: u8, b_nrm: u8, rounding: Rounding) -> Result<Vec<SeedMetrics>> {
    CodecConfig::new(cfg.dim, b_dir, b_nrm)?;
    (0..cfg.n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let (keys, queries) = trial_draws(cfg.base_seed, s, cfg.dim, cfg.n_keys, cfg.n_queries);
            let (rot, _) = trial_seeds(cfg.base_seed.wrapping_add(s));
            let codec = AnyCodec::octopus(CodecConfig::new(cfg.dim, b_dir, b_nrm)?.with_rounding(rounding).with_seed(rot))?;
            metric_suite(&keys, &queries, &codec)
        })
        .collect()
}

fn pct_change(x: f64, reference: f64) -> f64 {
    100.0 * (x - reference) / reference
}

/// OCTOPUS over `(b+δ, b−δ)` for δ ∈ {−2..2}, skipping splits with a
/// zero-bit side. ΔMSE is relative to the uniform `(b, b)` split.
pub fn run_bitsplit_sweep(cfg: &SweepConfig) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for &b in &cfg.bits {
        let mut block = Vec::new();
        for delta in -2i32..=2 {
            let (d, n) = (i32::from(b) + delta, i32::from(b) - delta);
            if !(1..=8).contains(&d) || !(1..=8).contains(&n) {
                continue;
            }
            let metrics = octopus_cell(cfg, d as u8, n as u8, cfg.rounding)?;
            let mut row = MetricRow::new("bitsplit", CodecId::Octopus, b).with_seed_metrics(&metrics).with_split(d as u8, n as u8);
            row.rounding = Some(cfg.rounding.name().to_string());
            block.push((delta, row));
        }
        let reference = block.iter().find(|(d, _)| *d == 0).and_then(|(_, r)| r.mse);
        for (_, mut row) in block {
            row.delta_mse_pct = reference.zip(row.mse).map(|(r, m)| pct_change(m, r));
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Bit split used by the ablation: the default split, and `(1, 1)` at one bit.
pub fn ablation_split(b: u8) -> Result<(u8, u8)> {
    if b == 1 {
        Ok((1, 1))
    } else {
        default_bit_split(b)
    }
}

/// Every rounding mode at every bit width; ΔMSE is relative to scalar.
pub fn run_rounding_ablation(cfg: &SweepConfig) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for &b in &cfg.bits {
        let (d, n) = ablation_split(b)?;
        let mut reference = None;
        for mode in Rounding::ALL {
            let metrics = octopus_cell(cfg, d, n, mode)?;
            let mut row = MetricRow::new("rounding", CodecId::Octopus, b).with_seed_metrics(&metrics).with_split(d, n);
            row.rounding = Some(mode.name().to_string());
            if mode == Rounding::Scalar {
                reference = row.mse;
            }
            row.delta_mse_pct = reference.zip(row.mse).map(|(r, m)| pct_change(m, r));
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SyntheticProbeConfig {
        SyntheticProbeConfig { dim: 32, n_keys: 40, n_queries: 3, n_seeds: 3, bits: vec![2, 3], ..Default::default() }
    }

    #[test]
    fn table1_rows_and_fairness() {
        let cfg = SyntheticProbeConfig { codecs: CodecId::ALL.to_vec(), ..tiny() };
        let rows = run_table1(&cfg).unwrap();
        assert_eq!(rows.len(), 12);
        let fp = rows.iter().find(|r| r.codec == CodecId::Fp32).unwrap();
        assert!((fp.cos.unwrap() - 1.0).abs() < 1e-12 && fp.mse.unwrap() < 1e-24 && fp.ip_abs_err.unwrap() < 1e-9);
        let get = |c, b| rows.iter().find(|r| r.codec == c && r.bits == b).unwrap();
        // Same draws and same stage-one state.
        assert_eq!(get(CodecId::TqQjl, 3).mse, get(CodecId::TqMse, 2).mse);
        assert_eq!(get(CodecId::TqQjl, 3).cos, get(CodecId::TqMse, 2).cos);
        assert_eq!(get(CodecId::OctopusQjl, 2).mse, get(CodecId::Octopus, 2).mse);
    }

    #[test]
    fn table1_is_deterministic_across_thread_counts() {
        let cfg = tiny();
        let a = run_table1(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_table1(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_bits_rejected() {
        let cfg = SyntheticProbeConfig { bits: vec![1], codecs: vec![CodecId::TqQjl], ..tiny() };
        assert!(run_table1(&cfg).is_err());
        assert!(run_needle(&NeedleConfig { noise_fraction: 1.0, ..Default::default() }, CodecId::Fp32, 2).is_err());
    }

    #[test]
    fn needle_exact_query_is_concentrated() {
        let cfg = NeedleConfig { dim: 64, distractors: 64, n_seeds: 4, noise_fraction: 0.0, ..Default::default() };
        let row = run_needle(&cfg, CodecId::Fp32, 2).unwrap();
        assert!(row.softmax_mass.unwrap() > 0.5);
    }

    #[test]
    fn sweep_reference_row_has_zero_delta() {
        let cfg = SweepConfig { dim: 32, n_keys: 50, n_seeds: 2, bits: vec![2], ..SweepConfig::bitsplit() };
        let rows = run_bitsplit_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        let r = rows.iter().find(|r| r.b_dir == Some(2)).unwrap();
        assert_eq!(r.delta_mse_pct, Some(0.0));
        assert!(rows.iter().all(|r| r.ip_abs_err.is_none()));
    }
}
