//! Built-in benchmark tasks.
//!
//! Each task defines an in-distribution generator, at least two OOD test
//! generators, an in-model backend, and the proxies it exercises. All
//! numeric fields have recorded defaults and are overridable from the JSON
//! benchmark config.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bench::ProxyName;
use crate::{Dataset, Error, Result, Sample, Seed};

fn default_epsilon() -> f64 {
    0.01
}
fn default_shift() -> f64 {
    3.0
}
fn eps_proxies() -> Vec<ProxyName> {
    vec![ProxyName::Constant, ProxyName::Auxiliary]
}

/// Narrow-inside-wide Gaussians: the likelihood-inversion task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonGaussianTask {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Mean of the second, shifted OOD set.
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default = "eps_proxies")]
    pub proxies: Vec<ProxyName>,
}

impl Default for EpsilonGaussianTask {
    fn default() -> Self {
        EpsilonGaussianTask {
            epsilon: default_epsilon(),
            shift: default_shift(),
            proxies: eps_proxies(),
        }
    }
}

fn default_length() -> usize {
    64
}
fn default_alphabet() -> usize {
    256
}
fn default_step_sigma() -> f64 {
    3.0
}
fn default_markov_order() -> usize {
    1
}
fn default_markov_smoothing() -> f64 {
    0.05
}
fn complexity_proxies() -> Vec<ProxyName> {
    vec![ProxyName::Constant, ProxyName::Complexity]
}

/// Quantized random walks against constant and pure-noise sequences; the
/// in-model is a short-context Markov chain, under which constant
/// sequences score *higher* than the training walks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexityTask {
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "default_alphabet")]
    pub alphabet: usize,
    #[serde(default = "default_step_sigma")]
    pub step_sigma: f64,
    #[serde(default = "default_markov_order")]
    pub markov_order: usize,
    #[serde(default = "default_markov_smoothing")]
    pub smoothing: f64,
    #[serde(default = "complexity_proxies")]
    pub proxies: Vec<ProxyName>,
}

impl Default for ComplexityTask {
    fn default() -> Self {
        ComplexityTask {
            length: default_length(),
            alphabet: default_alphabet(),
            step_sigma: default_step_sigma(),
            markov_order: default_markov_order(),
            smoothing: default_markov_smoothing(),
            proxies: complexity_proxies(),
        }
    }
}

fn default_signal_pairs() -> usize {
    2
}
fn default_noise_dims() -> usize {
    64
}
fn default_tight_sigma() -> f64 {
    0.2
}
fn default_wide_sigma() -> f64 {
    1.34
}
fn default_local_bins() -> usize {
    24
}
fn correlation_proxies() -> Vec<ProxyName> {
    vec![ProxyName::Constant, ProxyName::Local]
}

/// Dependence-detection task. The in-distribution couples each signal
/// pair through a common per-pair scale (tight or wide, a correlation a
/// diagonal mixture can represent); OOD draws every coordinate
/// independently from the same marginals. Extra independent noise
/// dimensions give the naive criterion a large, uninformative likelihood
/// spread that the marginal-ratio proxy cancels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationTask {
    #[serde(default = "default_signal_pairs")]
    pub signal_pairs: usize,
    #[serde(default = "default_noise_dims")]
    pub noise_dims: usize,
    #[serde(default = "default_tight_sigma")]
    pub tight_sigma: f64,
    #[serde(default = "default_wide_sigma")]
    pub wide_sigma: f64,
    #[serde(default = "default_local_bins")]
    pub local_bins: usize,
    #[serde(default = "correlation_proxies")]
    pub proxies: Vec<ProxyName>,
}

impl Default for CorrelationTask {
    fn default() -> Self {
        CorrelationTask {
            signal_pairs: default_signal_pairs(),
            noise_dims: default_noise_dims(),
            tight_sigma: default_tight_sigma(),
            wide_sigma: default_wide_sigma(),
            local_bins: default_local_bins(),
            proxies: correlation_proxies(),
        }
    }
}

impl CorrelationTask {
    pub fn dim(&self) -> usize {
        2 * self.signal_pairs + self.noise_dims
    }

    pub fn mixture_k(&self) -> usize {
        1 << self.signal_pairs
    }

    /// In-distribution: per-pair common scale, then independent values.
    pub fn gen_in(&self, n: usize, seed: Seed) -> Result<Dataset> {
        self.generate(n, seed, PairCoupling::Coupled)
    }

    /// Fully independent coordinates with the same marginals.
    pub fn gen_independent(&self, n: usize, seed: Seed) -> Result<Dataset> {
        self.generate(n, seed, PairCoupling::Independent)
    }

    /// Every signal pair forced onto opposite scales.
    pub fn gen_cross_scale(&self, n: usize, seed: Seed) -> Result<Dataset> {
        self.generate(n, seed, PairCoupling::CrossScale)
    }

    fn generate(&self, n: usize, seed: Seed, coupling: PairCoupling) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if !(self.tight_sigma > 0.0 && self.wide_sigma > self.tight_sigma) {
            return Err(Error::invalid("need 0 < tight_sigma < wide_sigma"));
        }
        let mut rng = seed.rng();
        let mut ds = Dataset::empty(self.dim())?;
        for _ in 0..n {
            let mut values = Vec::with_capacity(self.dim());
            for _ in 0..self.signal_pairs {
                let (sa, sb) = match coupling {
                    PairCoupling::Coupled => {
                        let s = self.pick_scale(&mut rng);
                        (s, s)
                    }
                    PairCoupling::Independent => {
                        (self.pick_scale(&mut rng), self.pick_scale(&mut rng))
                    }
                    PairCoupling::CrossScale => {
                        if rng.random::<f64>() < 0.5 {
                            (self.tight_sigma, self.wide_sigma)
                        } else {
                            (self.wide_sigma, self.tight_sigma)
                        }
                    }
                };
                let za: f64 = rng.sample(StandardNormal);
                let zb: f64 = rng.sample(StandardNormal);
                values.push(sa * za);
                values.push(sb * zb);
            }
            for _ in 0..self.noise_dims {
                let z: f64 = rng.sample(StandardNormal);
                values.push(z);
            }
            ds.push(Sample::new(values)?)?;
        }
        Ok(ds)
    }

    fn pick_scale<R: Rng>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < 0.5 {
            self.tight_sigma
        } else {
            self.wide_sigma
        }
    }
}

enum PairCoupling {
    Coupled,
    Independent,
    CrossScale,
}

fn default_sem_dims() -> usize {
    1
}
fn default_bg_dims() -> usize {
    16
}
fn default_sem_center() -> f64 {
    1.2
}
fn default_sem_sd() -> f64 {
    0.4
}
fn default_bg_sd() -> f64 {
    3.0
}
fn default_mu() -> f64 {
    0.5
}
fn background_proxies() -> Vec<ProxyName> {
    vec![ProxyName::Constant, ProxyName::Background]
}

/// Semantics-plus-background task: a clustered semantic block carries the
/// signal while a wide independent background block confounds the naive
/// likelihood. The background proxy perturbs the data and refits, which
/// flattens the semantic structure but roughly preserves the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticBackgroundTask {
    #[serde(default = "default_sem_dims")]
    pub semantic_dims: usize,
    #[serde(default = "default_bg_dims")]
    pub background_dims: usize,
    /// In-distribution semantic clusters at plus/minus this center.
    #[serde(default = "default_sem_center")]
    pub semantic_center: f64,
    #[serde(default = "default_sem_sd")]
    pub semantic_sd: f64,
    #[serde(default = "default_bg_sd")]
    pub background_sd: f64,
    /// Coordinate replacement rate for the background proxy.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "background_proxies")]
    pub proxies: Vec<ProxyName>,
}

impl Default for SemanticBackgroundTask {
    fn default() -> Self {
        SemanticBackgroundTask {
            semantic_dims: default_sem_dims(),
            background_dims: default_bg_dims(),
            semantic_center: default_sem_center(),
            semantic_sd: default_sem_sd(),
            background_sd: default_bg_sd(),
            mu: default_mu(),
            proxies: background_proxies(),
        }
    }
}

fn default_label_center() -> f64 {
    2.0
}
fn default_label_sd() -> f64 {
    0.5
}
fn default_far_center() -> f64 {
    8.0
}
fn default_label_epochs() -> usize {
    300
}
fn default_label_step() -> f64 {
    0.5
}
fn label_proxies() -> Vec<ProxyName> {
    vec![ProxyName::Constant, ProxyName::LabelBased]
}

/// Two labeled clusters; OOD sits either between them (high predictive
/// entropy) or far beyond them (confident, low entropy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelTask {
    /// Clusters at plus/minus this center.
    #[serde(default = "default_label_center")]
    pub center: f64,
    #[serde(default = "default_label_sd")]
    pub cluster_sd: f64,
    #[serde(default = "default_far_center")]
    pub far_center: f64,
    #[serde(default = "default_label_epochs")]
    pub epochs: usize,
    #[serde(default = "default_label_step")]
    pub step: f64,
    #[serde(default = "label_proxies")]
    pub proxies: Vec<ProxyName>,
}

impl Default for LabelTask {
    fn default() -> Self {
        LabelTask {
            center: default_label_center(),
            cluster_sd: default_label_sd(),
            far_center: default_far_center(),
            epochs: default_label_epochs(),
            step: default_label_step(),
            proxies: label_proxies(),
        }
    }
}

impl LabelTask {
    /// Balanced labeled clusters at plus/minus `center`.
    pub fn gen_labeled(&self, n: usize, seed: Seed) -> Result<Dataset> {
        if n < 2 {
            return Err(Error::invalid("labeled task needs at least 2 samples"));
        }
        let mut ds = Dataset::empty(1)?;
        let mut rng = seed.rng();
        let half = n / 2;
        for i in 0..n {
            let label = u32::from(i >= half);
            let c = if label == 0 { -self.center } else { self.center };
            let z: f64 = rng.sample(StandardNormal);
            ds.push(Sample::with_label(vec![c + self.cluster_sd * z], Some(label))?)?;
        }
        Ok(ds)
    }
}
