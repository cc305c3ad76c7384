use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::DiagGaussian;
use crate::{Dataset, Error, Result, Seed};

/// Mixture of diagonal Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<DiagGaussian>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, components: Vec<DiagGaussian>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::invalid(
                "weights and components must be non-empty and the same length",
            ));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::invalid("mixture weights must be strictly positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "mixture weights must sum to 1 within 1e-12 (sum = {total})"
            )));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::invalid("mixture components must share one dimension"));
        }
        Ok(GaussianMixture {
            weights,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DiagGaussian] {
        &self.components
    }

    pub(crate) fn log_density_raw(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| w.ln() + c.log_density_raw(values))
            .collect();
        log_sum_exp(&terms)
    }

    /// Posterior component responsibilities at `values`; also returns the
    /// mixture log-density there.
    pub(crate) fn responsibilities(&self, values: &[f64], out: &mut Vec<f64>) -> f64 {
        out.clear();
        out.extend(
            self.weights
                .iter()
                .zip(&self.components)
                .map(|(w, c)| w.ln() + c.log_density_raw(values)),
        );
        let lse = log_sum_exp(out);
        for t in out.iter_mut() {
            *t = (*t - lse).exp();
        }
        lse
    }

    pub(crate) fn sample_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = self.components.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = i;
                break;
            }
        }
        self.components[idx].sample_values(rng)
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// An EM fit together with its mean log-likelihood trace (one entry per
/// iteration, evaluated before the corresponding M-step).
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub model: GaussianMixture,
    pub mean_log_likelihood: Vec<f64>,
    pub iterations: usize,
}

/// EM for a diagonal Gaussian mixture.
///
/// Initialization: `k` distinct samples drawn by seed become the initial
/// means, weights start uniform, and every component starts at the global
/// per-dimension standard deviation. The per-iteration mean log-likelihood
/// is non-decreasing (up to 1e-9); fitting stops after `max_iters`
/// iterations or when the improvement drops below `tol`.
pub fn fit_gmm(
    ds: &Dataset,
    k: usize,
    max_iters: usize,
    tol: f64,
    sigma_floor: f64,
    seed: Seed,
) -> Result<GmmFit> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 {
        return Err(Error::invalid("mixture needs at least one component"));
    }
    if k > ds.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the dataset size {}",
            ds.len()
        )));
    }
    if !(sigma_floor.is_finite() && sigma_floor > 0.0) {
        return Err(Error::invalid("sigma_floor must be strictly positive"));
    }

    let n = ds.len();
    let dim = ds.dim();

    // Global sd for initial sigmas.
    let global = super::gaussian::fit_diag_gaussian(ds, sigma_floor)?;
    let init_sigma = global.sigma().to_vec();

    // Seeded draw of k distinct sample indices (partial Fisher-Yates).
    let mut rng = seed.rng();
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }

    let mut weights = vec![1.0 / k as f64; k];
    let mut means: Vec<Vec<f64>> = indices[..k]
        .iter()
        .map(|&i| ds.samples()[i].values().to_vec())
        .collect();
    let mut sigmas: Vec<Vec<f64>> = vec![init_sigma; k];

    let mut trace = Vec::new();
    let mut resp = vec![vec![0.0; k]; n];
    let mut scratch = Vec::with_capacity(k);

    let mut iterations = 0;
    for iter in 0..max_iters {
        let mixture = GaussianMixture::new(
            weights.clone(),
            means
                .iter()
                .zip(&sigmas)
                .map(|(m, s)| DiagGaussian::new(m.clone(), s.clone()))
                .collect::<Result<_>>()?,
        )?;

        // E-step and log-likelihood under the current parameters.
        let mut ll = 0.0;
        for (s, r) in ds.iter().zip(resp.iter_mut()) {
            ll += mixture.responsibilities(s.values(), &mut scratch);
            r.copy_from_slice(&scratch);
        }
        ll /= n as f64;
        let improved = trace.last().map_or(f64::INFINITY, |prev| ll - prev);
        trace.push(ll);
        iterations = iter + 1;
        if improved < tol {
            break;
        }

        // M-step.
        for comp in 0..k {
            let nk: f64 = resp.iter().map(|r| r[comp]).sum();
            if nk <= f64::MIN_POSITIVE * n as f64 {
                // Starved component: keep its parameters.
                weights[comp] = nk / n as f64;
                continue;
            }
            weights[comp] = nk / n as f64;
            let mut mu = vec![0.0; dim];
            for (s, r) in ds.iter().zip(&resp) {
                for (acc, &v) in mu.iter_mut().zip(s.values()) {
                    *acc += r[comp] * v;
                }
            }
            for m in &mut mu {
                *m /= nk;
            }
            let mut var = vec![0.0; dim];
            for (s, r) in ds.iter().zip(&resp) {
                for ((acc, m), &v) in var.iter_mut().zip(&mu).zip(s.values()) {
                    let d = v - m;
                    *acc += r[comp] * d * d;
                }
            }
            sigmas[comp] = var
                .iter()
                .map(|v| (v / nk).sqrt().max(sigma_floor))
                .collect();
            means[comp] = mu;
        }
        // Keep the weight-sum invariant exact against float drift.
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
    }

    let model = GaussianMixture::new(
        weights,
        means
            .into_iter()
            .zip(sigmas)
            .map(|(m, s)| DiagGaussian::new(m, s))
            .collect::<Result<_>>()?,
    )?;
    Ok(GmmFit {
        model,
        mean_log_likelihood: trace,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::gaussian::fit_diag_gaussian;
    use crate::generate::{gen_gaussian, GaussianSpec};
    use crate::{Sample, Seed};

    #[test]
    fn k1_matches_closed_form_mle() {
        let ds = gen_gaussian(&GaussianSpec::isotropic(2, 0.5, 1.5).unwrap(), 500, Seed(41)).unwrap();
        let single = fit_diag_gaussian(&ds, 1e-6).unwrap();
        let fit = fit_gmm(&ds, 1, 50, 1e-10, 1e-6, Seed(42)).unwrap();
        let comp = &fit.model.components()[0];
        for d in 0..2 {
            assert!((comp.mean()[d] - single.mean()[d]).abs() < 1e-9);
            assert!((comp.sigma()[d] - single.sigma()[d]).abs() < 1e-9);
        }
        assert!((fit.model.weights()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separated_clusters_are_recovered() {
        // Two clusters at -5 and +5; Monte-Carlo oracle tolerances.
        let a = gen_gaussian(&GaussianSpec::isotropic(1, -5.0, 1.0).unwrap(), 2_500, Seed(43))
            .unwrap();
        let b = gen_gaussian(&GaussianSpec::isotropic(1, 5.0, 1.0).unwrap(), 2_500, Seed(44))
            .unwrap();
        let mut ds = Dataset::empty(1).unwrap();
        for s in a.iter().chain(b.iter()) {
            ds.push(s.clone()).unwrap();
        }
        let fit = fit_gmm(&ds, 2, 200, 1e-9, 1e-6, Seed(45)).unwrap();
        let mut means: Vec<f64> = fit.model.components().iter().map(|c| c.mean()[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 5.0).abs() < 0.1, "means {means:?}");
        assert!((means[1] - 5.0).abs() < 0.1, "means {means:?}");
        for w in fit.model.weights() {
            assert!((w - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn log_likelihood_trace_is_monotone() {
        let ds = gen_gaussian(&GaussianSpec::isotropic(2, 0.0, 2.0).unwrap(), 400, Seed(46)).unwrap();
        let fit = fit_gmm(&ds, 3, 60, 0.0, 1e-6, Seed(47)).unwrap();
        for w in fit.mean_log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "trace decreased: {w:?}");
        }
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let ds = Dataset::from_samples(1, vec![Sample::new(vec![0.0]).unwrap()]).unwrap();
        assert!(fit_gmm(&ds, 2, 10, 1e-8, 1e-6, Seed(48)).is_err());
    }

    #[test]
    fn degenerate_weight_zero_equals_other_component() {
        let c0 = DiagGaussian::new(vec![0.0], vec![1.0]).unwrap();
        let c1 = DiagGaussian::new(vec![9.0], vec![0.5]).unwrap();
        // Weight (1, ~0): density must equal component 0 up to the weight term.
        let m = GaussianMixture::new(vec![1.0 - 1e-15, 1e-15], vec![c0.clone(), c1]).unwrap();
        let x = [0.3];
        assert!((m.log_density_raw(&x) - c0.log_density_raw(&x)).abs() < 1e-12);
    }

    #[test]
    fn balanced_mixture_component_counts() {
        let c0 = DiagGaussian::new(vec![-4.0], vec![0.5]).unwrap();
        let c1 = DiagGaussian::new(vec![4.0], vec![0.5]).unwrap();
        let m = GaussianMixture::new(vec![0.5, 0.5], vec![c0, c1]).unwrap();
        let model = crate::density::DensityModel::GaussianMixture(m);
        let draws = model.sample(10_000, Seed(49)).unwrap();
        let below = draws.iter().filter(|s| s.values()[0] < 0.0).count();
        let frac = below as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "component fraction {frac}");
    }
}
