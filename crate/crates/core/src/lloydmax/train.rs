//! Lloyd-Max training against an analytic density or an empirical sample.
//!
//! Both trainers start from equal-mass quantiles, alternate nearest-centroid
//! assignment with conditional-mean updates, and stop once the relative
//! distortion decrease drops below `rel_tol`. A cell that ends up empty is
//! dropped and the cell with the largest distortion is split at its mean.

use super::codebook::{Codebook, CodebookKind};
use crate::error::{invalid, Result};
use crate::marginals::ScalarDensity;
use crate::quadrature::{integrate_panels, NODE_BUDGET, PANEL_ORDER};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub kind: CodebookKind,
    pub dim: u32,
    /// Codebook domain for sample training; defaults to the sample range.
    pub domain: Option<(f64, f64)>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { max_iters: 100_000, rel_tol: 1e-10, kind: CodebookKind::Custom, dim: 0, domain: None }
    }
}

impl TrainOptions {
    pub fn tagged(kind: CodebookKind, dim: u32) -> Self {
        Self { kind, dim, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    pub converged: bool,
    pub repairs: usize,
    /// Distortion of each assignment step, in order.
    pub distortion: Vec<f64>,
}

impl TrainReport {
    pub fn final_distortion(&self) -> f64 {
        self.distortion.last().copied().unwrap_or(f64::NAN)
    }
}

/// Relative slack allowed when checking monotonicity against rounding noise.
const MONOTONE_SLACK: f64 = 1e-9;

struct CellStats {
    mass: f64,
    mean: f64,
    /// Squared error about the supplied centroid.
    sse: f64,
    /// Squared error about the cell mean.
    spread: f64,
}

fn check_bits(bits: u8) -> Result<usize> {
    if !(1..=8).contains(&bits) {
        return invalid(format!("codebook bits {bits} outside [1, 8]"));
    }
    Ok(1usize << bits)
}

// ---------------------------------------------------------------------------
// Density trainer

struct DensityCells<'a> {
    density: &'a dyn ScalarDensity,
    breaks: Vec<f64>,
    panels: usize,
}

impl DensityCells<'_> {
    /// Moments of the density over `[a, b]` about `center`, split at breakpoints.
    fn moments(&self, a: f64, b: f64, center: f64, panels: usize) -> [f64; 3] {
        let mut pts = vec![a];
        pts.extend(self.breaks.iter().copied().filter(|&x| x > a && x < b));
        pts.push(b);
        let mut m = [0.0; 3];
        for w in pts.windows(2) {
            let f = |x: f64| self.density.pdf(x);
            m[0] += integrate_panels(f, w[0], w[1], panels);
            m[1] += integrate_panels(|x| (x - center) * f(x), w[0], w[1], panels);
            m[2] += integrate_panels(|x| (x - center) * (x - center) * f(x), w[0], w[1], panels);
        }
        m
    }

    fn stats(&self, a: f64, b: f64, centroid: f64) -> CellStats {
        let center = 0.5 * (a + b);
        let [m0, m1, m2] = self.moments(a, b, center, self.panels);
        if m0 <= f64::MIN_POSITIVE {
            return CellStats { mass: 0.0, mean: centroid, sse: 0.0, spread: 0.0 };
        }
        let shift = m1 / m0;
        let off = centroid - center;
        CellStats {
            mass: m0,
            mean: center + shift,
            sse: (m2 - 2.0 * off * m1 + off * off * m0).max(0.0),
            spread: (m2 - shift * m1).max(0.0),
        }
    }
}

fn cell_edges(lo: f64, hi: f64, centroids: &[f64]) -> Vec<f64> {
    let mut edges = Vec::with_capacity(centroids.len() + 1);
    edges.push(lo);
    edges.extend(centroids.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(hi);
    edges
}

/// Trains a `bits`-bit codebook against a normalized density.
pub fn train_from_density(density: &dyn ScalarDensity, bits: u8, opts: &TrainOptions) -> Result<Codebook> {
    train_from_density_with_report(density, bits, opts).map(|(cb, _)| cb)
}

pub fn train_from_density_with_report(
    density: &dyn ScalarDensity,
    bits: u8,
    opts: &TrainOptions,
) -> Result<(Codebook, TrainReport)> {
    let k = check_bits(bits)?;
    let (lo, hi) = density.domain();
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return invalid(format!("density domain [{lo}, {hi}] is not a finite interval"));
    }
    let mut breaks = density.breakpoints();
    breaks.retain(|&x| x > lo && x < hi);
    let cells = DensityCells { density, breaks, panels: (NODE_BUDGET / PANEL_ORDER / k).max(1) };

    // Cumulative table on a fine grid; used for the mass check and the init.
    let grid = NODE_BUDGET;
    let h = (hi - lo) / grid as f64;
    let mut cdf = Vec::with_capacity(grid + 1);
    cdf.push(0.0);
    let mut acc = 0.0;
    for i in 0..grid {
        let a = lo + h * i as f64;
        let b = if i + 1 == grid { hi } else { a + h };
        acc += cells.moments(a, b, 0.5 * (a + b), 1)[0];
        cdf.push(acc);
    }
    let mass = acc;
    if !mass.is_finite() || (mass - 1.0).abs() > 1e-6 {
        return invalid(format!("density integrates to {mass}, not 1"));
    }

    let mut centroids: Vec<f64> = (0..k)
        .map(|j| {
            let target = (j as f64 + 0.5) / k as f64 * mass;
            let i = cdf.partition_point(|&c| c < target).clamp(1, grid);
            let (c0, c1) = (cdf[i - 1], cdf[i]);
            let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
            lo + h * ((i - 1) as f64 + t)
        })
        .collect();
    dedup_increasing(&mut centroids, lo, hi);

    let mut report = TrainReport { iterations: 0, converged: false, repairs: 0, distortion: Vec::new() };
    let mut prev = f64::INFINITY;
    while report.iterations < opts.max_iters {
        report.iterations += 1;
        let edges = cell_edges(lo, hi, &centroids);
        let stats: Vec<CellStats> =
            (0..k).map(|j| cells.stats(edges[j], edges[j + 1], centroids[j])).collect();
        let distortion: f64 = stats.iter().map(|s| s.sse).sum();

        if let Some(empty) = stats.iter().position(|s| s.mass <= 0.0) {
            let worst = max_spread(&stats);
            let (a, b) = (edges[worst], edges[worst + 1]);
            let split = stats[worst].mean;
            let left = cells.stats(a, split, 0.0).mean;
            let right = cells.stats(split, b, 0.0).mean;
            centroids[worst] = left;
            centroids[empty] = right;
            centroids.sort_by(f64::total_cmp);
            dedup_increasing(&mut centroids, lo, hi);
            report.repairs += 1;
            prev = f64::INFINITY;
            continue;
        }

        if prev.is_finite() {
            debug_assert!(
                distortion <= prev * (1.0 + MONOTONE_SLACK) + f64::MIN_POSITIVE,
                "distortion rose from {prev} to {distortion}"
            );
        }
        report.distortion.push(distortion);
        let mut next: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        dedup_increasing(&mut next, lo, hi);
        let done = prev.is_finite() && (distortion == 0.0 || (prev - distortion) <= opts.rel_tol * distortion);
        centroids = next;
        prev = distortion;
        if done {
            report.converged = true;
            break;
        }
    }
    let cb = Codebook::new(opts.kind, bits, opts.dim, (lo, hi), centroids)?;
    Ok((cb, report))
}

fn max_spread(stats: &[CellStats]) -> usize {
    let mut best = 0;
    for (i, s) in stats.iter().enumerate() {
        if s.spread > stats[best].spread {
            best = i;
        }
    }
    best
}

/// Nudges centroids apart so they stay strictly increasing inside `[lo, hi]`.
fn dedup_increasing(c: &mut [f64], lo: f64, hi: f64) {
    for i in 1..c.len() {
        if c[i] <= c[i - 1] {
            c[i] = next_up(c[i - 1]).min(hi);
        }
    }
    for i in (0..c.len().saturating_sub(1)).rev() {
        if c[i] >= c[i + 1] {
            c[i] = next_down(c[i + 1]).max(lo);
        }
    }
}

fn next_up(x: f64) -> f64 {
    let step = (x.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
    x + step
}

fn next_down(x: f64) -> f64 {
    let step = (x.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
    x - step
}

// ---------------------------------------------------------------------------
// Sample trainer

/// Prefix sums with a compensation term per entry (Neumaier summation).
struct Prefix {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl Prefix {
    fn build(values: impl Iterator<Item = f64>, len: usize) -> Self {
        let mut hi = Vec::with_capacity(len + 1);
        let mut lo = Vec::with_capacity(len + 1);
        hi.push(0.0);
        lo.push(0.0);
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for v in values {
            let t = s + v;
            if s.abs() >= v.abs() {
                c += (s - t) + v;
            } else {
                c += (v - t) + s;
            }
            s = t;
            hi.push(s);
            lo.push(c);
        }
        Self { hi, lo }
    }

    fn range(&self, a: usize, b: usize) -> f64 {
        (self.hi[b] - self.hi[a]) + (self.lo[b] - self.lo[a])
    }
}

/// Sorted samples with prefix moments, reusable across bit widths.
pub struct SortedSamples {
    values: Vec<f64>,
    s1: Prefix,
    s2: Prefix,
    distinct: usize,
}

impl SortedSamples {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("no samples to train on");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("samples must be finite");
        }
        values.sort_by(f64::total_cmp);
        let distinct = 1 + values.windows(2).filter(|w| w[0] != w[1]).count();
        let s1 = Prefix::build(values.iter().copied(), values.len());
        let s2 = Prefix::build(values.iter().map(|v| v * v), values.len());
        Ok(Self { values, s1, s2, distinct })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn stats(&self, a: usize, b: usize, centroid: f64) -> CellStats {
        let n = (b - a) as f64;
        if b <= a {
            return CellStats { mass: 0.0, mean: centroid, sse: 0.0, spread: 0.0 };
        }
        let s1 = self.s1.range(a, b);
        let s2 = self.s2.range(a, b);
        let mean = (s1 / n).clamp(self.values[a], self.values[b - 1]);
        CellStats {
            mass: n,
            mean,
            sse: (s2 - 2.0 * centroid * s1 + centroid * centroid * n).max(0.0),
            spread: (s2 - mean * s1).max(0.0),
        }
    }

    fn cell_ranges(&self, centroids: &[f64]) -> Vec<usize> {
        let mut idx = Vec::with_capacity(centroids.len() + 1);
        idx.push(0);
        for w in centroids.windows(2) {
            let b = 0.5 * (w[0] + w[1]);
            idx.push(self.values.partition_point(|&v| v < b));
        }
        idx.push(self.values.len());
        idx
    }
}

/// Trains a codebook on an empirical sample (order-independent: the sample is sorted).
pub fn train_from_samples(samples: &[f64], bits: u8, opts: &TrainOptions) -> Result<Codebook> {
    let sorted = SortedSamples::new(samples.to_vec())?;
    train_from_sorted(&sorted, bits, opts).map(|(cb, _)| cb)
}

pub fn train_from_sorted(sorted: &SortedSamples, bits: u8, opts: &TrainOptions) -> Result<(Codebook, TrainReport)> {
    let k = check_bits(bits)?;
    if sorted.distinct < k {
        return invalid(format!("{} distinct sample values cannot fill {k} cells", sorted.distinct));
    }
    let n = sorted.len();
    let v = sorted.values();
    let (lo, hi) = opts.domain.unwrap_or((v[0], v[n - 1]));
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return invalid(format!("bad codebook domain [{lo}, {hi}]"));
    }

    let mut centroids: Vec<f64> = (0..k)
        .map(|j| v[(((2 * j + 1) * n) / (2 * k)).min(n - 1)])
        .collect();
    dedup_increasing(&mut centroids, lo, hi);

    let mut report = TrainReport { iterations: 0, converged: false, repairs: 0, distortion: Vec::new() };
    let mut prev = f64::INFINITY;
    while report.iterations < opts.max_iters {
        report.iterations += 1;
        let idx = sorted.cell_ranges(&centroids);
        let stats: Vec<CellStats> = (0..k).map(|j| sorted.stats(idx[j], idx[j + 1], centroids[j])).collect();

        if let Some(empty) = stats.iter().position(|s| s.mass == 0.0) {
            let worst = max_spread(&stats);
            let (a, b) = (idx[worst], idx[worst + 1]);
            let split = a + v[a..b].partition_point(|&x| x < stats[worst].mean);
            let split = split.clamp(a + 1, b - 1);
            centroids[worst] = sorted.stats(a, split, 0.0).mean;
            centroids[empty] = sorted.stats(split, b, 0.0).mean;
            centroids.sort_by(f64::total_cmp);
            dedup_increasing(&mut centroids, lo, hi);
            report.repairs += 1;
            prev = f64::INFINITY;
            if report.repairs > 4 * k {
                return invalid("cell repair did not converge");
            }
            continue;
        }

        let distortion = stats.iter().map(|s| s.sse).sum::<f64>() / n as f64;
        if prev.is_finite() {
            debug_assert!(
                distortion <= prev * (1.0 + MONOTONE_SLACK) + 1e-300,
                "distortion rose from {prev} to {distortion}"
            );
        }
        report.distortion.push(distortion);
        let mut next: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        dedup_increasing(&mut next, lo, hi);
        let done = prev.is_finite() && (distortion == 0.0 || (prev - distortion) <= opts.rel_tol * distortion);
        let unchanged = next == centroids;
        centroids = next;
        prev = distortion;
        if done || unchanged {
            report.converged = true;
            break;
        }
    }
    let cb = Codebook::new(opts.kind, bits, opts.dim, (lo, hi), centroids)?;
    Ok((cb, report))
}

/// Mean squared quantization error of `cb` under `density`, by quadrature.
pub fn density_distortion(cb: &Codebook, density: &dyn ScalarDensity) -> f64 {
    let (lo, hi) = density.domain();
    let edges = cell_edges(lo, hi, cb.centroids());
    let cells = DensityCells { density, breaks: density.breakpoints(), panels: (NODE_BUDGET / PANEL_ORDER / cb.len()).max(1) };
    (0..cb.len()).map(|j| cells.stats(edges[j], edges[j + 1], cb.centroid(j)).sse).sum()
}

/// Mean squared quantization error of `cb` over a sample.
pub fn sample_distortion(cb: &Codebook, samples: &[f64]) -> f64 {
    samples.iter().map(|&x| (x - cb.quantize(x)).powi(2)).sum::<f64>() / samples.len() as f64
}

/// Conditional mean of each cell under `density` (for checking the centroid condition).
pub fn cell_conditional_means(cb: &Codebook, density: &dyn ScalarDensity) -> Vec<f64> {
    let (lo, hi) = density.domain();
    let edges = cell_edges(lo, hi, cb.centroids());
    let cells = DensityCells { density, breaks: density.breakpoints(), panels: 64 };
    (0..cb.len()).map(|j| cells.stats(edges[j], edges[j + 1], cb.centroid(j)).mean).collect()
}
