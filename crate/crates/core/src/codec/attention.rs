//! Split-K single-query attention over a compressed key cache.
//!
//! Each split runs the online-softmax recurrence over its chunk and emits a
//! partial `(m, ℓ, acc)`; partials are merged with the usual rescaling
//! identity, so the result does not depend on the split count.

use super::octopus::{CompressedKey, OctopusCodec};
use crate::error::{invalid, Result};

/// Running softmax statistics: max logit, normalizer and weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPartial {
    pub max: f64,
    pub norm: f64,
    pub acc: Vec<f64>,
}

impl SoftmaxPartial {
    pub fn empty(width: usize) -> Self {
        Self { max: f64::NEG_INFINITY, norm: 0.0, acc: vec![0.0; width] }
    }

    /// Folds one `(logit, value)` pair into the running state.
    pub fn push(&mut self, logit: f64, value: &[f64]) {
        let m = self.max.max(logit);
        let old = (self.max - m).exp();
        let new = (logit - m).exp();
        self.norm = self.norm * old + new;
        for (a, v) in self.acc.iter_mut().zip(value) {
            *a = *a * old + new * v;
        }
        self.max = m;
    }

    pub fn merge(&self, other: &SoftmaxPartial) -> SoftmaxPartial {
        if other.norm == 0.0 {
            return self.clone();
        }
        if self.norm == 0.0 {
            return other.clone();
        }
        let m = self.max.max(other.max);
        let (a, b) = ((self.max - m).exp(), (other.max - m).exp());
        SoftmaxPartial {
            max: m,
            norm: self.norm * a + other.norm * b,
            acc: self.acc.iter().zip(&other.acc).map(|(x, y)| x * a + y * b).collect(),
        }
    }

    pub fn finish(&self) -> Vec<f64> {
        self.acc.iter().map(|a| a / self.norm).collect()
    }
}

/// `softmax(scores / √d) · values` with the cache split into `splits` chunks.
pub fn attention_decode(
    codec: &OctopusCodec,
    q: &[f64],
    cache: &[CompressedKey],
    values: &[Vec<f64>],
    splits: usize,
) -> Result<Vec<f64>> {
    if cache.is_empty() {
        return invalid("empty key cache");
    }
    if values.len() != cache.len() {
        return invalid(format!("{} value rows for {} keys", values.len(), cache.len()));
    }
    let width = values[0].len();
    if values.iter().any(|v| v.len() != width) {
        return invalid("value rows have different lengths");
    }
    for ck in cache {
        codec.check_state(ck)?;
    }
    let prepared = codec.prepare_query(q)?;
    let scale = 1.0 / (codec.config().dim as f64).sqrt();
    let splits = splits.clamp(1, cache.len());
    let chunk = cache.len().div_ceil(splits);
    let partials: Vec<SoftmaxPartial> = cache
        .chunks(chunk)
        .zip(values.chunks(chunk))
        .map(|(keys, vals)| {
            let mut p = SoftmaxPartial::empty(width);
            for (ck, v) in keys.iter().zip(vals) {
                p.push(codec.score_prepared(&prepared, ck) * scale, v);
            }
            p
        })
        .collect();
    let merged = partials.iter().skip(1).fold(partials[0].clone(), |acc, p| acc.merge(p));
    Ok(merged.finish())
}

/// Softmax weights of `logits`.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}
