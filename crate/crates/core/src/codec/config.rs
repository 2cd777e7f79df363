use crate::error::{invalid, Result};

/// Direction-candidate search used by the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rounding {
    /// Independent nearest-centroid rounding of ξ, η and the triplet norm.
    Scalar,
    /// The scalar seed and its forward neighbours, offsets in `{0, 1}²`.
    Local2x2,
    /// The scalar seed and its eight neighbours (the default).
    Local3x3,
    /// Every pair of direction centroids.
    Full,
}

impl Rounding {
    pub const ALL: [Rounding; 4] = [Rounding::Scalar, Rounding::Local2x2, Rounding::Local3x3, Rounding::Full];

    pub fn name(self) -> &'static str {
        match self {
            Rounding::Scalar => "scalar",
            Rounding::Local2x2 => "local2x2",
            Rounding::Local3x3 => "local3x3",
            Rounding::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

/// Everything that determines a codec instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodecConfig {
    pub dim: usize,
    pub b_dir: u8,
    pub b_nrm: u8,
    pub rounding: Rounding,
    pub rotation_seed: u64,
    pub qjl: bool,
    pub qjl_seed: u64,
}

impl CodecConfig {
    /// A validated config with local 3×3 rounding, no QJL sidecar, and seed 0.
    pub fn new(dim: usize, b_dir: u8, b_nrm: u8) -> Result<Self> {
        let cfg = Self { dim, b_dir, b_nrm, rounding: Rounding::Local3x3, rotation_seed: 0, qjl: false, qjl_seed: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The default `(b+1, b-1)` split around nominal `b`.
    pub fn nominal(dim: usize, b: u8) -> Result<Self> {
        let (d, n) = default_bit_split(b)?;
        Self::new(dim, d, n)
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn with_seed(mut self, rotation_seed: u64) -> Self {
        self.rotation_seed = rotation_seed;
        self
    }

    pub fn with_qjl(mut self, qjl_seed: u64) -> Self {
        self.qjl = true;
        self.qjl_seed = qjl_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || !self.dim.is_power_of_two() {
            return invalid(format!("dimension {} is not a power of two >= 2", self.dim));
        }
        for (name, b) in [("b_dir", self.b_dir), ("b_nrm", self.b_nrm)] {
            if !(1..=8).contains(&b) {
                return invalid(format!("{name} = {b} outside [1, 8]"));
            }
        }
        if self.qjl && self.qjl_seed == self.rotation_seed {
            return invalid("the residual projection needs a seed distinct from the rotation seed");
        }
        Ok(())
    }

    /// Number of triplets, `ceil(dim / 3)`.
    pub fn n_tri(&self) -> usize {
        self.dim.div_ceil(3)
    }
}

/// `(b_dir, b_nrm) = (b + 1, b - 1)`.
pub fn default_bit_split(b: u8) -> Result<(u8, u8)> {
    if !(2..=7).contains(&b) {
        return invalid(format!("nominal bit width {b} must be in [2, 7]"));
    }
    Ok((b + 1, b - 1))
}

/// Key-side stored bits per coordinate, including the f32 norm and the
/// optional sign sketch with its f16 residual norm.
pub fn effective_bits_per_coord(cfg: &CodecConfig) -> f64 {
    let n_tri = cfg.n_tri();
    let mut bits = 2 * n_tri * cfg.b_dir as usize + n_tri * cfg.b_nrm as usize + 32;
    if cfg.qjl {
        bits += cfg.dim + 16;
    }
    bits as f64 / cfg.dim as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_split() {
        assert_eq!(default_bit_split(2).unwrap(), (3, 1));
        assert_eq!(default_bit_split(3).unwrap(), (4, 2));
        assert_eq!(default_bit_split(4).unwrap(), (5, 3));
        assert!(default_bit_split(1).is_err());
    }

    #[test]
    fn effective_rates() {
        let cfg = CodecConfig::new(128, 3, 1).unwrap();
        assert!((effective_bits_per_coord(&cfg) - 333.0 / 128.0).abs() < 1e-12);
        let q = cfg.with_qjl(9);
        assert!((effective_bits_per_coord(&q) - effective_bits_per_coord(&cfg) - 1.125).abs() < 1e-12);
        let cfg = CodecConfig::new(64, 5, 3).unwrap();
        assert!((effective_bits_per_coord(&cfg) - 318.0 / 64.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(CodecConfig::new(96, 3, 1).is_err());
        assert!(CodecConfig::new(128, 0, 1).is_err());
        assert!(CodecConfig::new(128, 3, 9).is_err());
        let cfg = CodecConfig::new(128, 3, 1).unwrap().with_seed(5);
        assert!(cfg.with_qjl(5).validate().is_err());
        assert!(cfg.with_qjl(6).validate().is_ok());
        assert_eq!(CodecConfig::new(4, 1, 1).unwrap().n_tri(), 2);
        assert_eq!(CodecConfig::new(128, 1, 1).unwrap().n_tri(), 43);
    }
}
