use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result};

/// Per-dimension histogram density with additive smoothing.
///
/// Each dimension gets equal-width bins over the training range plus two
/// open-ended guard bins realized as exponential tails (rate = 1/bin
/// width), so any finite point has a finite log-density and the density
/// still integrates to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramModel {
    dims: Vec<HistogramDim>,
    smoothing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDim {
    /// `bins + 1` ascending, equally spaced edges.
    edges: Vec<f64>,
    /// `bins + 2` masses: left guard, interior bins, right guard. Sums to 1.
    masses: Vec<f64>,
}

impl HistogramDim {
    fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    fn log_density(&self, x: f64) -> f64 {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        let w = self.width();
        let lambda = 1.0 / w;
        if x < lo {
            // Left exponential tail carrying the left guard mass.
            self.masses[0].ln() + lambda.ln() - lambda * (lo - x)
        } else if x > hi {
            let m = *self.masses.last().unwrap();
            m.ln() + lambda.ln() - lambda * (x - hi)
        } else {
            let bins = self.masses.len() - 2;
            let idx = (((x - lo) / w) as usize).min(bins - 1);
            (self.masses[idx + 1] / w).ln()
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = self.masses.len() - 1;
        for (i, m) in self.masses.iter().enumerate() {
            acc += m;
            if u < acc {
                idx = i;
                break;
            }
        }
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        let w = self.width();
        let bins = self.masses.len() - 2;
        if idx == 0 {
            let t: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            lo + w * t.ln() // exponential tail below the support
        } else if idx == bins + 1 {
            let t: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            hi - w * t.ln()
        } else {
            let t: f64 = rng.random();
            lo + w * ((idx - 1) as f64 + t)
        }
    }
}

impl HistogramModel {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dimensions(&self) -> &[HistogramDim] {
        &self.dims
    }

    pub(crate) fn log_density_raw(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.dims)
            .map(|(&x, d)| d.log_density(x))
            .sum()
    }

    pub(crate) fn sample_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.dims.iter().map(|d| d.sample(rng)).collect()
    }
}

/// Fit a per-dimension histogram with `bins` equal-width bins per dimension
/// and `smoothing` pseudo-counts added to every bin (guards included).
pub fn fit_histogram(ds: &Dataset, bins: usize, smoothing: f64) -> Result<HistogramModel> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(Error::invalid("smoothing must be strictly positive"));
    }
    let n = ds.len() as f64;
    let mut dims = Vec::with_capacity(ds.dim());
    for d in 0..ds.dim() {
        let (mut lo, mut hi) = ds.column_range(d)?;
        if lo == hi {
            // Constant column: give it a unit-width support.
            lo -= 0.5;
            hi += 0.5;
        }
        let w = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for s in ds.iter() {
            let x = s.values()[d];
            let idx = (((x - lo) / w) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let denom = n + smoothing * (bins + 2) as f64;
        let mut masses = Vec::with_capacity(bins + 2);
        masses.push(smoothing / denom);
        masses.extend(counts.iter().map(|&c| (c as f64 + smoothing) / denom));
        masses.push(smoothing / denom);
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
        dims.push(HistogramDim { edges, masses });
    }
    Ok(HistogramModel { dims, smoothing })
}
