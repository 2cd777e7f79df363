use crate::error::{invalid, Result};

/// What a codebook was trained for; stored in the file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodebookKind {
    OctCoordinate,
    TripletNorm,
    RotatedCoordinate,
    Custom,
}

impl CodebookKind {
    pub fn code(self) -> u8 {
        match self {
            CodebookKind::OctCoordinate => 0,
            CodebookKind::TripletNorm => 1,
            CodebookKind::RotatedCoordinate => 2,
            CodebookKind::Custom => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => CodebookKind::OctCoordinate,
            1 => CodebookKind::TripletNorm,
            2 => CodebookKind::RotatedCoordinate,
            3 => CodebookKind::Custom,
            _ => return None,
        })
    }
}

/// A scalar quantizer: sorted centroids and the midpoints between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    kind: CodebookKind,
    bits: u8,
    dim: u32,
    lo: f64,
    hi: f64,
    centroids: Vec<f64>,
    boundaries: Vec<f64>,
}

impl Codebook {
    /// Validates and builds a codebook; boundaries are derived from the centroids.
    pub fn new(kind: CodebookKind, bits: u8, dim: u32, domain: (f64, f64), centroids: Vec<f64>) -> Result<Self> {
        let (lo, hi) = domain;
        if !(1..=8).contains(&bits) {
            return invalid(format!("codebook bits {bits} outside [1, 8]"));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return invalid(format!("bad codebook domain [{lo}, {hi}]"));
        }
        if centroids.len() != 1usize << bits {
            return invalid(format!("{} centroids for a {bits}-bit codebook", centroids.len()));
        }
        if centroids.iter().any(|c| !c.is_finite() || *c < lo || *c > hi) {
            return invalid("centroid outside the codebook domain");
        }
        if centroids.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("centroids are not strictly increasing");
        }
        let boundaries = centroids.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self { kind, bits, dim, lo, hi, centroids, boundaries })
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// The same codebook with every centroid rounded to `f32`, as stored on disk.
    pub fn rounded_to_f32(&self) -> Result<Self> {
        let c = self.centroids.iter().map(|&c| f64::from(c as f32)).collect();
        Codebook::new(self.kind, self.bits, self.dim, (self.lo, self.hi), c)
    }

    /// Averages each centroid with the negation of its mirror, giving an
    /// exactly odd-symmetric book for a domain symmetric about zero.
    pub fn symmetrized(&self) -> Result<Self> {
        let n = self.centroids.len();
        let c = (0..n).map(|i| 0.5 * (self.centroids[i] - self.centroids[n - 1 - i])).collect();
        Codebook::new(self.kind, self.bits, self.dim, (self.lo, self.hi), c)
    }

    /// Cell index of `x` after clamping to the domain. A value equal to a
    /// boundary belongs to the upper cell.
    #[inline]
    pub fn quantize_index(&self, x: f64) -> usize {
        let x = x.clamp(self.lo, self.hi);
        self.boundaries.partition_point(|&b| b <= x)
    }

    pub fn dequantize(&self, index: usize) -> Result<f64> {
        match self.centroids.get(index) {
            Some(&c) => Ok(c),
            None => invalid(format!("index {index} out of range for {} centroids", self.centroids.len())),
        }
    }

    #[inline]
    pub fn centroid(&self, index: usize) -> f64 {
        self.centroids[index]
    }

    /// Nearest centroid value.
    pub fn quantize(&self, x: f64) -> f64 {
        self.centroids[self.quantize_index(x)]
    }
}
