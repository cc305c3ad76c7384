use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Monotone map from `[lo, hi]` onto `{0, ..., 2^bits - 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub bits: u32,
    pub lo: f64,
    pub hi: f64,
}

impl Quantizer {
    pub fn new(bits: u32, lo: f64, hi: f64) -> Result<Self> {
        if bits == 0 || bits > 8 {
            return Err(Error::invalid("quantizer bits must be in 1..=8"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("quantizer range needs finite lo < hi"));
        }
        Ok(Quantizer { bits, lo, hi })
    }

    /// 8-bit quantizer over a dataset's global value range.
    pub fn from_dataset(ds: &crate::Dataset) -> Result<Self> {
        let (lo, hi) = ds.value_range()?;
        if lo == hi {
            // Constant data still needs a non-degenerate range.
            return Self::new(8, lo - 0.5, hi + 0.5);
        }
        Self::new(8, lo, hi)
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    /// Quantize one coordinate; errors outside `[lo, hi]`.
    pub fn quantize_value(&self, index: usize, x: f64) -> Result<u8> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::QuantizerRange {
                index,
                value: x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let levels = f64::from(self.levels());
        let q = ((x - self.lo) / (self.hi - self.lo) * levels).floor();
        Ok(q.min(levels - 1.0) as u8)
    }

    pub fn quantize(&self, values: &[f64]) -> Result<Vec<u8>> {
        values
            .iter()
            .enumerate()
            .map(|(i, &x)| self.quantize_value(i, x))
            .collect()
    }
}

/// Compressor identification recorded alongside complexity proxies so the
/// exact bit lengths can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressorInfo {
    pub name: String,
    pub backend: String,
    pub container: String,
    pub level: u32,
}

impl CompressorInfo {
    pub fn deflate_max() -> Self {
        CompressorInfo {
            name: "deflate".to_string(),
            backend: "flate2/miniz_oxide (rust backend)".to_string(),
            container: "raw".to_string(),
            level: Compression::best().level(),
        }
    }
}

/// Bit length of `bytes` under raw DEFLATE at the maximum-effort setting.
/// Deterministic: identical input always yields identical length.
pub fn compress_length(bytes: &[u8]) -> u64 {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(bytes).expect("in-memory deflate write");
    let compressed = enc.finish().expect("in-memory deflate finish");
    compressed.len() as u64 * 8
}
