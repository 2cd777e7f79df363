//! Source densities that drive codebook training, and the samplers used to
//! validate them.

use crate::error::{invalid, Result};
use crate::octahedral::{oct_encode, oct_xi_density_unchecked};
use crate::quadrature::integrate;
use crate::rng::SampleStream;
use statrs::function::gamma::ln_gamma;

/// A one-dimensional density on a closed interval.
pub trait ScalarDensity {
    fn pdf(&self, x: f64) -> f64;
    fn domain(&self) -> (f64, f64);
    /// Interior points where the density is not smooth; integration panels
    /// are split there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityKind {
    /// One coordinate of a uniformly random unit vector in `dim` dimensions.
    RotatedCoordinate { dim: usize },
    /// Norm of a three-coordinate block of a uniform unit vector.
    TripletNorm { dim: usize },
    /// One octahedral coordinate of a uniform direction on the 2-sphere.
    OctCoordinate,
    Uniform { lo: f64, hi: f64 },
    /// Standard normal truncated to `[-10, 10]` (the lost mass is below 1e-22).
    UnitGaussian,
    /// Split angle `atan2(‖right‖, ‖left‖)` of a uniform direction whose two
    /// halves have `half` coordinates each: `∝ sin^(half-1)(2ψ)` on `[0, π/2]`.
    PolarAngle { half: usize },
}

/// A density with its precomputed normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySpec {
    kind: DensityKind,
    log_norm: f64,
}

impl DensitySpec {
    pub fn new(kind: DensityKind) -> Result<Self> {
        let log_norm = match kind {
            DensityKind::RotatedCoordinate { dim } => {
                if dim < 4 {
                    return invalid(format!("coordinate density needs dim >= 4, got {dim}"));
                }
                coord_log_norm(dim)
            }
            DensityKind::TripletNorm { dim } => {
                if dim < 5 {
                    return invalid(format!("triplet-norm density needs dim >= 5, got {dim}"));
                }
                triplet_log_norm(dim)
            }
            DensityKind::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                    return invalid(format!("bad uniform domain [{lo}, {hi}]"));
                }
                -(hi - lo).ln()
            }
            DensityKind::PolarAngle { half } => {
                if half == 0 {
                    return invalid("polar split needs at least one coordinate per half");
                }
                // ∫₀^{π/2} sin^(m-1)(2ψ) dψ = B(1/2, m/2) / 2
                let m = half as f64;
                let ln_beta = ln_gamma(0.5) + ln_gamma(m / 2.0) - ln_gamma(0.5 + m / 2.0);
                std::f64::consts::LN_2 - ln_beta
            }
            DensityKind::OctCoordinate => 0.0,
            DensityKind::UnitGaussian => -0.5 * (2.0 * std::f64::consts::PI).ln(),
        };
        Ok(Self { kind, log_norm })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }
}

impl ScalarDensity for DensitySpec {
    fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return 0.0;
        }
        match self.kind {
            DensityKind::RotatedCoordinate { dim } => {
                coord_unnormalized(x, dim) * self.log_norm.exp()
            }
            DensityKind::TripletNorm { dim } => triplet_unnormalized(x, dim) * self.log_norm.exp(),
            DensityKind::OctCoordinate => oct_xi_density_unchecked(x),
            DensityKind::Uniform { .. } => self.log_norm.exp(),
            DensityKind::UnitGaussian => (self.log_norm - 0.5 * x * x).exp(),
            DensityKind::PolarAngle { half } => {
                (2.0 * x).sin().max(0.0).powi(half as i32 - 1) * self.log_norm.exp()
            }
        }
    }

    fn domain(&self) -> (f64, f64) {
        match self.kind {
            DensityKind::RotatedCoordinate { .. } | DensityKind::OctCoordinate => (-1.0, 1.0),
            DensityKind::TripletNorm { .. } => (0.0, 1.0),
            DensityKind::Uniform { lo, hi } => (lo, hi),
            DensityKind::UnitGaussian => (-10.0, 10.0),
            DensityKind::PolarAngle { .. } => (0.0, std::f64::consts::FRAC_PI_2),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            DensityKind::OctCoordinate => vec![0.0],
            _ => Vec::new(),
        }
    }
}

fn coord_log_norm(dim: usize) -> f64 {
    let a = (dim as f64 - 1.0) / 2.0;
    let ln_beta = 2.0 * ln_gamma(a) - ln_gamma(2.0 * a);
    -(ln_beta + (dim as f64 - 2.0) * std::f64::consts::LN_2)
}

fn coord_unnormalized(u: f64, dim: usize) -> f64 {
    let base = (1.0 - u * u).max(0.0);
    base.powf((dim as f64 - 3.0) / 2.0)
}

fn triplet_log_norm(dim: usize) -> f64 {
    let b = (dim as f64 - 3.0) / 2.0;
    let ln_beta = ln_gamma(1.5) + ln_gamma(b) - ln_gamma(1.5 + b);
    std::f64::consts::LN_2 - ln_beta
}

fn triplet_unnormalized(r: f64, dim: usize) -> f64 {
    let base = (1.0 - r * r).max(0.0);
    r * r * base.powf((dim as f64 - 5.0) / 2.0)
}

/// Density of one rotated coordinate, `(1-u²)^((d-3)/2) / (B((d-1)/2, (d-1)/2) · 2^(d-2))`.
pub fn coord_density(u: f64, dim: usize) -> Result<f64> {
    if !(-1.0..=1.0).contains(&u) {
        return invalid(format!("coordinate {u} outside [-1, 1]"));
    }
    Ok(DensitySpec::new(DensityKind::RotatedCoordinate { dim })?.pdf(u))
}

/// Density of a triplet norm, `2r²(1-r²)^((d-5)/2) / B(3/2, (d-3)/2)`.
pub fn triplet_norm_density(r: f64, dim: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return invalid(format!("triplet norm {r} outside [0, 1]"));
    }
    Ok(DensitySpec::new(DensityKind::TripletNorm { dim })?.pdf(r))
}

/// `Var(ρ)` by quadrature of the triplet-norm density, with `E[ρ²]` checked
/// against its closed form `3/d`.
pub fn triplet_norm_variance(dim: usize) -> Result<f64> {
    let spec = DensitySpec::new(DensityKind::TripletNorm { dim })?;
    let m1 = integrate(|r| r * spec.pdf(r), 0.0, 1.0);
    let m2 = integrate(|r| r * r * spec.pdf(r), 0.0, 1.0);
    debug_assert!((m2 - 3.0 / dim as f64).abs() < 1e-9, "E[rho^2] = {m2}");
    Ok(m2 - m1 * m1)
}

/// Second moment `E[ρ²]` by quadrature.
pub fn triplet_norm_second_moment(dim: usize) -> Result<f64> {
    let spec = DensitySpec::new(DensityKind::TripletNorm { dim })?;
    Ok(integrate(|r| r * r * spec.pdf(r), 0.0, 1.0))
}

/// Unit vector number `index` of a uniform-sphere stream.
pub fn unit_sphere_sample(dim: usize, stream: &SampleStream, index: u64) -> Vec<f64> {
    let mut g = stream.gaussian_vec(index, dim);
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        g[0] = 1.0;
        return g;
    }
    for x in g.iter_mut() {
        *x /= norm;
    }
    g
}

/// `count` uniform unit vectors in `dim` dimensions (normalized Gaussians).
pub fn sample_unit_sphere(dim: usize, stream: &SampleStream, count: usize) -> Vec<Vec<f64>> {
    (0..count as u64).map(|i| unit_sphere_sample(dim, stream, i)).collect()
}

/// Octahedral coordinates of `count` uniform directions, flattened as
/// `[xi_0, eta_0, xi_1, eta_1, ...]`.
pub fn sample_oct_coordinates(stream: &SampleStream, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * count);
    let mut g = [0.0; 3];
    for i in 0..count as u64 {
        stream.gaussians_at(i, &mut g);
        let c = oct_encode(g);
        out.push(c.xi);
        out.push(c.eta);
    }
    out
}
