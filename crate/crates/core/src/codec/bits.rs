//! LSB-first bit streams: index 0 occupies the least significant bits of
//! the first byte, and a value may straddle byte boundaries.

use crate::error::{format, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: u32, bits: u32) {
        debug_assert!(bits <= 32 && (bits == 32 || value >> bits == 0));
        self.acc |= u64::from(value) << self.filled;
        self.filled += bits;
        while self.filled >= 8 {
            self.buf.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    /// Flushes the partial byte (zero padded) and returns the bytes.
    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.buf.push(self.acc as u8);
        }
        self.buf
    }
}

pub fn packed_len(count: usize, bits: u32) -> usize {
    (count * bits as usize).div_ceil(8)
}

/// Packs `values` at `bits` each into exactly `packed_len(values.len(), bits)` bytes.
pub fn pack_values(values: impl IntoIterator<Item = u32>, bits: u32) -> Vec<u8> {
    let mut w = BitWriter::new();
    for v in values {
        w.push(v, bits);
    }
    w.finish()
}

/// Reads `count` values of `bits` each; padding bits must be zero.
pub fn unpack_values(bytes: &[u8], count: usize, bits: u32) -> Result<Vec<u32>> {
    if bytes.len() != packed_len(count, bits) {
        return format(format!("stream of {} bytes cannot hold {count} x {bits}-bit values", bytes.len()));
    }
    let mask = (1u64 << bits) - 1;
    let mut out = Vec::with_capacity(count);
    let (mut acc, mut have, mut pos) = (0u64, 0u32, 0usize);
    for _ in 0..count {
        while have < bits {
            acc |= u64::from(bytes[pos]) << have;
            pos += 1;
            have += 8;
        }
        out.push((acc & mask) as u32);
        acc >>= bits;
        have -= bits;
    }
    if acc != 0 || pos != bytes.len() {
        return format("nonzero padding bits in packed stream");
    }
    Ok(out)
}
