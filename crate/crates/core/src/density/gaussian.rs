use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ln_2pi;
use crate::{Dataset, Error, Result};

/// Diagonal-covariance Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    sigma: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != sigma.len() {
            return Err(Error::invalid(
                "mean and sigma must be non-empty and the same length",
            ));
        }
        if !sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid("sigma entries must be strictly positive"));
        }
        Ok(DiagGaussian { mean, sigma })
    }

    /// Standard normal in `dim` dimensions.
    pub fn standard(dim: usize) -> Self {
        DiagGaussian {
            mean: vec![0.0; dim],
            sigma: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub(crate) fn log_density_raw(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&x, m), s) in values.iter().zip(&self.mean).zip(&self.sigma) {
            let z = (x - m) / s;
            acc += -0.5 * ln_2pi() - s.ln() - 0.5 * z * z;
        }
        acc
    }

    pub(crate) fn sample_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.sigma)
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s * z
            })
            .collect()
    }
}

/// Maximum-likelihood mean and per-dimension standard deviation, with the
/// standard deviation clamped below by `sigma_floor`.
pub fn fit_diag_gaussian(ds: &Dataset, sigma_floor: f64) -> Result<DiagGaussian> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(sigma_floor.is_finite() && sigma_floor > 0.0) {
        return Err(Error::invalid("sigma_floor must be strictly positive"));
    }
    let n = ds.len() as f64;
    let dim = ds.dim();
    let mut mean = vec![0.0; dim];
    for s in ds.iter() {
        for (acc, &v) in mean.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for s in ds.iter() {
        for ((acc, m), &v) in var.iter_mut().zip(&mean).zip(s.values()) {
            let d = v - m;
            *acc += d * d;
        }
    }
    let sigma = var
        .iter()
        .map(|v| (v / n).sqrt().max(sigma_floor))
        .collect();
    DiagGaussian::new(mean, sigma)
}
