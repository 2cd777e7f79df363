//! Octahedral parameterization of the unit 2-sphere onto `[-1, 1]²`.
//!
//! `sign(0)` is taken as `+1` throughout, so the south pole folds to the
//! corner `(1, 1)` and every corner decodes back to `(0, 0, -1)`.

use crate::error::{invalid, Result};

/// Safe divisor used wherever a norm could vanish.
pub const EPS: f64 = 1e-12;

/// A point of the octahedral square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctCoords {
    pub xi: f64,
    pub eta: f64,
}

impl OctCoords {
    /// Builds coordinates, clamping both components to `[-1, 1]`.
    pub fn new(xi: f64, eta: f64) -> Self {
        Self { xi: xi.clamp(-1.0, 1.0), eta: eta.clamp(-1.0, 1.0) }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Folds a 3-vector onto the square. Any nonzero vector is accepted (only its
/// direction matters); the zero vector maps to `(0, 0)`.
pub fn oct_encode(n: [f64; 3]) -> OctCoords {
    let l1 = n[0].abs() + n[1].abs() + n[2].abs();
    let inv = 1.0 / l1.max(EPS);
    let (px, py, pz) = (n[0] * inv, n[1] * inv, n[2] * inv);
    if pz >= 0.0 {
        OctCoords::new(px, py)
    } else {
        OctCoords::new(sign(px) * (1.0 - py.abs()), sign(py) * (1.0 - px.abs()))
    }
}

/// Unnormalized point on the octahedron surface for square coordinates.
#[inline]
pub fn oct_unfold(xi: f64, eta: f64) -> [f64; 3] {
    let r = 1.0 - xi.abs() - eta.abs();
    if r >= 0.0 {
        [xi, eta, r]
    } else {
        [sign(xi) * (1.0 - eta.abs()), sign(eta) * (1.0 - xi.abs()), r]
    }
}

/// Inverse of [`oct_encode`]: a unit vector on the sphere.
#[inline]
pub fn oct_decode_xy(xi: f64, eta: f64) -> [f64; 3] {
    let p = oct_unfold(xi, eta);
    // |p|₁ = 1 on the surface, so the L2 norm is at least 1/√3.
    let inv = 1.0 / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] * inv, p[1] * inv, p[2] * inv]
}

pub fn oct_decode(c: OctCoords) -> [f64; 3] {
    oct_decode_xy(c.xi, c.eta)
}

/// Marginal density of one octahedral coordinate when the direction is
/// uniform on the sphere. Symmetric in `xi`; integrates to one on `[-1, 1]`.
pub fn oct_xi_density(xi: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&xi) {
        return invalid(format!("octahedral coordinate {xi} outside [-1, 1]"));
    }
    Ok(oct_xi_density_unchecked(xi))
}

pub(crate) fn oct_xi_density_unchecked(xi: f64) -> f64 {
    let a = xi.abs();
    let root = (a * a + (1.0 - a) * (1.0 - a)).sqrt();
    let inner = (1.0 - a) / (1.0 - 2.0 * a + 3.0 * a * a) + a / (2.0 - 4.0 * a + 3.0 * a * a);
    inner / (std::f64::consts::PI * root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn encode_examples() {
        assert_eq!(oct_encode([0.0, 0.0, 1.0]), OctCoords { xi: 0.0, eta: 0.0 });
        assert_eq!(oct_encode([1.0, 0.0, 0.0]), OctCoords { xi: 1.0, eta: 0.0 });
        assert_eq!(oct_encode([0.0, 0.0, -1.0]), OctCoords { xi: 1.0, eta: 1.0 });
        let s = 1.0 / 3f64.sqrt();
        let c = oct_encode([s, s, s]);
        assert!((c.xi - 1.0 / 3.0).abs() < 1e-15 && (c.eta - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(oct_encode([0.0; 3]), OctCoords { xi: 0.0, eta: 0.0 });
    }

    #[test]
    fn decode_examples() {
        assert!(close3(oct_decode(OctCoords::new(0.0, 0.0)), [0.0, 0.0, 1.0], 0.0));
        assert!(close3(oct_decode(OctCoords::new(1.0, 1.0)), [0.0, 0.0, -1.0], 0.0));
        for (x, y) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            assert!(close3(oct_decode(OctCoords::new(x, y)), [0.0, 0.0, -1.0], 0.0));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close3(oct_decode(OctCoords::new(0.5, 0.5)), [h, h, 0.0], 1e-15));
    }

    #[test]
    fn construction_clamps() {
        let c = OctCoords::new(1.5, -3.0);
        assert_eq!((c.xi, c.eta), (1.0, -1.0));
    }

    #[test]
    fn density_normalized_and_symmetric() {
        let total = integrate(oct_xi_density_unchecked, -1.0, 0.0) + integrate(oct_xi_density_unchecked, 0.0, 1.0);
        assert!((total - 1.0).abs() < 1e-6, "total {total}");
        for i in 0..100 {
            let x = (i as f64 * 0.61803398875).fract();
            assert_eq!(oct_xi_density(x).unwrap(), oct_xi_density(-x).unwrap());
        }
        assert!(oct_xi_density(1.01).is_err());
        assert!(oct_xi_density(1.0).unwrap().is_finite());
    }
}
