//! Seeded synthetic data generators.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result, Sample};
use crate::seed::Seed;

/// Diagonal Gaussian parameters used for data generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    sigma: Vec<f64>,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("gaussian spec needs at least one dimension"));
        }
        if mean.len() != sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: sigma.len(),
            });
        }
        if !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::invalid("gaussian spec mean must be finite"));
        }
        if !sigma.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::invalid("gaussian spec sigma must be strictly positive"));
        }
        Ok(GaussianSpec { mean, sigma })
    }

    /// Same mean and sigma in every dimension.
    pub fn isotropic(dim: usize, mean: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![sigma; dim])
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
}

/// Draw `n` i.i.d. samples from a diagonal Gaussian.
pub fn gen_gaussian(spec: &GaussianSpec, n: usize, seed: Seed) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = seed.rng();
    let mut ds = Dataset::empty(spec.dim())?;
    for _ in 0..n {
        let values = spec
            .mean
            .iter()
            .zip(&spec.sigma)
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s * z
            })
            .collect();
        ds.push(Sample::new(values)?)?;
    }
    Ok(ds)
}

/// Quantized Gaussian random walks over the symbols `0..alphabet`.
///
/// The walk position is continuous, reflects at the alphabet boundaries so
/// it stays in `[0, alphabet-1]`, and is rounded to the nearest symbol on
/// store. `step_sigma = 0` yields constant sequences; very large steps make
/// successive symbols approach independent uniform draws.
pub fn gen_random_walk_sequences(
    n: usize,
    length: usize,
    step_sigma: f64,
    alphabet: usize,
    seed: Seed,
) -> Result<Dataset> {
    if n == 0 || length == 0 {
        return Err(Error::invalid("sequence count and length must be at least 1"));
    }
    if alphabet < 2 {
        return Err(Error::invalid("alphabet must have at least 2 symbols"));
    }
    if !(step_sigma.is_finite() && step_sigma >= 0.0) {
        return Err(Error::invalid("step_sigma must be finite and non-negative"));
    }
    let top = (alphabet - 1) as f64;
    let mut rng = seed.rng();
    let mut ds = Dataset::empty(length)?;
    for _ in 0..n {
        let mut pos = rng.random_range(0..alphabet) as f64;
        let mut values = Vec::with_capacity(length);
        values.push(pos);
        for _ in 1..length {
            let z: f64 = rng.sample(StandardNormal);
            pos = reflect(pos + step_sigma * z, top);
            values.push(pos.round());
        }
        ds.push(Sample::new(values)?)?;
    }
    Ok(ds)
}

/// Fold a position into `[0, top]` by reflecting at both ends.
fn reflect(x: f64, top: f64) -> f64 {
    if top == 0.0 {
        return 0.0;
    }
    let period = 2.0 * top;
    let mut r = x.rem_euclid(period);
    if r > top {
        r = period - r;
    }
    r
}

/// Constant sequences: each sample repeats one uniformly drawn symbol.
pub fn gen_constant_sequences(
    n: usize,
    length: usize,
    alphabet: usize,
    seed: Seed,
) -> Result<Dataset> {
    if n == 0 || length == 0 {
        return Err(Error::invalid("sequence count and length must be at least 1"));
    }
    if alphabet < 2 {
        return Err(Error::invalid("alphabet must have at least 2 symbols"));
    }
    let mut rng = seed.rng();
    let mut ds = Dataset::empty(length)?;
    for _ in 0..n {
        let sym = rng.random_range(0..alphabet) as f64;
        ds.push(Sample::new(vec![sym; length])?)?;
    }
    Ok(ds)
}

/// Pure-noise sequences: every symbol drawn independently and uniformly.
pub fn gen_uniform_sequences(
    n: usize,
    length: usize,
    alphabet: usize,
    seed: Seed,
) -> Result<Dataset> {
    if n == 0 || length == 0 {
        return Err(Error::invalid("sequence count and length must be at least 1"));
    }
    if alphabet < 2 {
        return Err(Error::invalid("alphabet must have at least 2 symbols"));
    }
    let mut rng = seed.rng();
    let mut ds = Dataset::empty(length)?;
    for _ in 0..n {
        let values = (0..length)
            .map(|_| rng.random_range(0..alphabet) as f64)
            .collect();
        ds.push(Sample::new(values)?)?;
    }
    Ok(ds)
}

/// Replace each coordinate independently, with probability `mu`, by a
/// uniform draw. `range = Some((lo, hi))` uses one range for every
/// coordinate; `None` uses the per-coordinate (min, max) of the input.
/// Unperturbed coordinates are copied bit-identically; labels are kept.
pub fn perturb_dataset(
    ds: &Dataset,
    mu: f64,
    range: Option<(f64, f64)>,
    seed: Seed,
) -> Result<Dataset> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::invalid("perturbation rate mu must be in (0, 1]"));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ranges: Vec<(f64, f64)> = match range {
        Some((lo, hi)) => {
            if !(lo < hi) {
                return Err(Error::invalid("perturbation range needs lo < hi"));
            }
            vec![(lo, hi); ds.dim()]
        }
        None => (0..ds.dim())
            .map(|d| ds.column_range(d))
            .collect::<Result<_>>()?,
    };
    let mut rng = seed.rng();
    let mut out = Dataset::empty(ds.dim())?;
    for s in ds.iter() {
        let values = s
            .values()
            .iter()
            .zip(&ranges)
            .map(|(&v, &(lo, hi))| {
                if rng.random::<f64>() < mu {
                    lo + rng.random::<f64>() * (hi - lo)
                } else {
                    v
                }
            })
            .collect();
        out.push(Sample::with_label(values, s.label())?)?;
    }
    Ok(out)
}
