//! Proxy out-distributions.
//!
//! Each construction stands in for the unknown true out-distribution and
//! exposes a possibly-unnormalized log-density; the detector subtracts the
//! in-model's log-density from it to form the OOD score. Constructions:
//!
//! * constant level (the classical wide-novelty prior; score reduces to
//!   the naive `-log p_in` criterion),
//! * a density fitted on auxiliary out-of-distribution data,
//! * a density fitted on coordinate-perturbed in-distribution data
//!   (background statistics),
//! * compressed-length complexity, `log p ∝ -L(x) ln 2`,
//! * a restricted "local" model fitted on the in-distribution data itself,
//! * the label-entropy construction `log p ∝ H(y(x)) + log p_in(x)`,
//! * a binary domain classifier's corrected logit plus `log p_in(x)`.

mod complexity;
mod finetune;

pub use complexity::{compress_length, CompressorInfo, Quantizer};
pub use finetune::{finetune_outlier_exposure, FineTuneConfig, FineTuneOutcome};

use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, DomainClassifier, ModelSpec, SoftmaxClassifier};
use crate::generate::perturb_dataset;
use crate::{Dataset, Error, Result, Sample, Seed};

/// A proxy out-distribution with a (possibly unnormalized) log-density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ProxyModel {
    Constant(ConstantProxy),
    Auxiliary(AuxiliaryProxy),
    Background(BackgroundProxy),
    Complexity(ComplexityProxy),
    Local(LocalProxy),
    LabelBased(LabelProxy),
    ClassifierLr(ClassifierLrProxy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantProxy {
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryProxy {
    pub model: DensityModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundProxy {
    pub model: DensityModel,
    /// Coordinate replacement rate used to build the perturbed data.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProxy {
    pub quantizer: Quantizer,
    pub compressor: CompressorInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalProxy {
    pub model: DensityModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProxy {
    pub classifier: SoftmaxClassifier,
    pub in_model: DensityModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierLrProxy {
    pub classifier: DomainClassifier,
    pub in_model: DensityModel,
}

impl ProxyModel {
    /// Wrap an already fitted density as an auxiliary-style proxy.
    pub fn auxiliary(model: DensityModel) -> Self {
        ProxyModel::Auxiliary(AuxiliaryProxy { model })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProxyModel::Constant(_) => "constant",
            ProxyModel::Auxiliary(_) => "auxiliary",
            ProxyModel::Background(_) => "background",
            ProxyModel::Complexity(_) => "complexity",
            ProxyModel::Local(_) => "local",
            ProxyModel::LabelBased(_) => "label_based",
            ProxyModel::ClassifierLr(_) => "classifier_lr",
        }
    }

    /// Whether the log-density is that of a normalized distribution.
    /// Posterior probabilities derived from unnormalized proxies rank
    /// correctly but are not calibrated.
    pub fn is_normalized(&self) -> bool {
        matches!(
            self,
            ProxyModel::Auxiliary(_) | ProxyModel::Background(_) | ProxyModel::Local(_)
        )
    }

    /// Input dimension the proxy is bound to, when it has one. Constant and
    /// complexity proxies accept any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ProxyModel::Constant(_) | ProxyModel::Complexity(_) => None,
            ProxyModel::Auxiliary(p) => Some(p.model.dim()),
            ProxyModel::Background(p) => Some(p.model.dim()),
            ProxyModel::Local(p) => Some(p.model.dim()),
            ProxyModel::LabelBased(p) => Some(p.in_model.dim()),
            ProxyModel::ClassifierLr(p) => Some(p.in_model.dim()),
        }
    }

    /// Log of the proxy density at `x`, up to the kind's normalizing
    /// constant. Finite for any finite input inside the proxy's domain.
    pub fn unnormalized_log_density(&self, x: &Sample) -> Result<f64> {
        if let Some(dim) = self.dim() {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.dim(),
                });
            }
        }
        match self {
            ProxyModel::Constant(p) => Ok(p.level),
            ProxyModel::Auxiliary(p) => p.model.log_density(x),
            ProxyModel::Background(p) => p.model.log_density(x),
            ProxyModel::Complexity(p) => {
                let bytes = p.quantizer.quantize(x.values())?;
                let bits = compress_length(&bytes);
                Ok(-(bits as f64) * std::f64::consts::LN_2)
            }
            ProxyModel::Local(p) => p.model.log_density(x),
            ProxyModel::LabelBased(p) => {
                let h = p.classifier.entropy(x)?;
                Ok(h + p.in_model.log_density(x)?)
            }
            ProxyModel::ClassifierLr(p) => {
                Ok(p.classifier.corrected_logit(x)? + p.in_model.log_density(x)?)
            }
        }
    }
}

/// Proxy whose log-density is the same constant everywhere. The resulting
/// OOD score is `level - log p_in(x)`: the naive density criterion.
pub fn build_constant_proxy(level: f64) -> ProxyModel {
    ProxyModel::Constant(ConstantProxy { level })
}

/// Fit `model_spec` on auxiliary out-of-distribution data.
pub fn build_auxiliary_proxy(aux: &Dataset, model_spec: &ModelSpec, seed: Seed) -> Result<ProxyModel> {
    if aux.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ProxyModel::Auxiliary(AuxiliaryProxy {
        model: model_spec.fit(aux, seed)?,
    }))
}

/// Background-statistics proxy: perturb the in-distribution data by
/// replacing each coordinate with rate `mu` (uniform over the
/// per-coordinate data range), then fit `model_spec` on the perturbed set.
pub fn build_background_proxy(
    in_ds: &Dataset,
    mu: f64,
    model_spec: &ModelSpec,
    seed: Seed,
) -> Result<ProxyModel> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::invalid("background perturbation rate must be in (0, 1)"));
    }
    let perturbed = perturb_dataset(in_ds, mu, None, seed.child(0))?;
    Ok(ProxyModel::Background(BackgroundProxy {
        model: model_spec.fit(&perturbed, seed.child(1))?,
        mu,
    }))
}

/// Input-complexity proxy: `log p(x) = -L(x) ln 2`, with `L` the bit
/// length of the quantized sample under the recorded DEFLATE setting.
pub fn build_complexity_proxy(quantizer: Quantizer) -> ProxyModel {
    ProxyModel::Complexity(ComplexityProxy {
        quantizer,
        compressor: CompressorInfo::deflate_max(),
    })
}

/// Local-feature proxy: a model of the same data fitted with restricted
/// context (lower Markov order, or per-dimension instead of joint). The
/// score `log p_local - log p_in` isolates the non-local structure.
pub fn build_local_proxy(local_model: DensityModel) -> ProxyModel {
    ProxyModel::Local(LocalProxy { model: local_model })
}

/// Label-based proxy `log p ∝ H(y(x)) + log p_in(x)`; the in-model terms
/// cancel in the score, which becomes exactly the predictive entropy.
pub fn build_label_proxy(
    classifier: SoftmaxClassifier,
    in_model: DensityModel,
) -> Result<ProxyModel> {
    if classifier.dim() != in_model.dim() {
        return Err(Error::DimensionMismatch {
            expected: in_model.dim(),
            found: classifier.dim(),
        });
    }
    Ok(ProxyModel::LabelBased(LabelProxy {
        classifier,
        in_model,
    }))
}

/// Binary-classifier proxy `log p ∝ corrected_logit(x) + log p_in(x)`;
/// the score becomes exactly the prior-corrected logit.
pub fn build_classifier_lr_proxy(
    classifier: DomainClassifier,
    in_model: DensityModel,
) -> Result<ProxyModel> {
    if classifier.dim() != in_model.dim() {
        return Err(Error::DimensionMismatch {
            expected: in_model.dim(),
            found: classifier.dim(),
        });
    }
    Ok(ProxyModel::ClassifierLr(ClassifierLrProxy {
        classifier,
        in_model,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{fit_diag_gaussian, fit_softmax, DiagGaussian};
    use crate::detector::{ood_score, score_dataset, score_values};
    use crate::generate::{gen_gaussian, GaussianSpec};
    use crate::metrics::auroc;

    #[test]
    fn constant_proxies_shift_scores_without_changing_ranks() {
        let model = DensityModel::DiagGaussian(DiagGaussian::standard(1));
        let ds = gen_gaussian(&GaussianSpec::isotropic(1, 0.0, 1.0).unwrap(), 200, Seed(100))
            .unwrap();
        let ood = gen_gaussian(&GaussianSpec::isotropic(1, 2.0, 1.0).unwrap(), 200, Seed(101))
            .unwrap();
        let mut aurocs = Vec::new();
        for level in [0.0, -3.5, 12.0] {
            let p = build_constant_proxy(level);
            let s_ood = score_values(&score_dataset(&model, &p, &ood).unwrap());
            let s_in = score_values(&score_dataset(&model, &p, &ds).unwrap());
            aurocs.push(auroc(&s_ood, &s_in).unwrap());
        }
        assert_eq!(aurocs[0], aurocs[1]);
        assert_eq!(aurocs[0], aurocs[2]);
    }

    #[test]
    fn auxiliary_proxy_recovers_analytic_density() {
        // Aux data drawn from the true out-distribution: fitted log-density
        // within 0.05 of the analytic one on a [-3, 3] grid.
        let spec = GaussianSpec::isotropic(1, 0.0, 1.0).unwrap();
        let aux = gen_gaussian(&spec, 100_000, Seed(102)).unwrap();
        let p = build_auxiliary_proxy(&aux, &ModelSpec::diag_gaussian(), Seed(103)).unwrap();
        let analytic = DiagGaussian::standard(1);
        let analytic = DensityModel::DiagGaussian(analytic);
        for i in -30..=30 {
            let x = Sample::new(vec![i as f64 * 0.1]).unwrap();
            let got = p.unnormalized_log_density(&x).unwrap();
            let want = analytic.log_density(&x).unwrap();
            assert!((got - want).abs() <= 0.05, "at {:?}: {got} vs {want}", x.values());
        }
    }

    #[test]
    fn auxiliary_equal_to_training_data_is_uninformative() {
        let spec = GaussianSpec::isotropic(1, 0.0, 1.0).unwrap();
        let train = gen_gaussian(&spec, 20_000, Seed(104)).unwrap();
        let model = DensityModel::DiagGaussian(fit_diag_gaussian(&train, 1e-6).unwrap());
        let p = build_auxiliary_proxy(&train, &ModelSpec::diag_gaussian(), Seed(105)).unwrap();
        let in_test = gen_gaussian(&spec, 5_000, Seed(106)).unwrap();
        let ood_test = gen_gaussian(&spec, 5_000, Seed(107)).unwrap();
        let s_ood = score_values(&score_dataset(&model, &p, &ood_test).unwrap());
        let s_in = score_values(&score_dataset(&model, &p, &in_test).unwrap());
        for s in s_ood.iter().chain(&s_in) {
            assert!(s.abs() < 1e-9, "score {s}");
        }
        let a = auroc(&s_ood, &s_in).unwrap();
        assert!((a - 0.5).abs() < 0.02);
    }

    #[test]
    fn background_proxy_is_deterministic_under_seed() {
        let ds = gen_gaussian(&GaussianSpec::isotropic(3, 0.0, 1.0).unwrap(), 500, Seed(108))
            .unwrap();
        let a = build_background_proxy(&ds, 0.4, &ModelSpec::diag_gaussian(), Seed(109)).unwrap();
        let b = build_background_proxy(&ds, 0.4, &ModelSpec::diag_gaussian(), Seed(109)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn label_proxy_score_is_exactly_the_entropy() {
        let mut ds = Dataset::empty(1).unwrap();
        for (label, c) in [(0u32, -2.0), (1u32, 2.0)] {
            let part = gen_gaussian(
                &GaussianSpec::isotropic(1, c, 0.5).unwrap(),
                500,
                Seed(110).child(u64::from(label)),
            )
            .unwrap();
            for s in part.iter() {
                ds.push(Sample::with_label(s.values().to_vec(), Some(label)).unwrap())
                    .unwrap();
            }
        }
        let classifier = fit_softmax(&ds, 100, 0.5, Seed(111)).unwrap().classifier;
        let in_model = DensityModel::DiagGaussian(DiagGaussian::standard(1));
        let p = build_label_proxy(classifier.clone(), in_model.clone()).unwrap();
        for i in -20..=20 {
            let x = Sample::new(vec![i as f64 * 0.2]).unwrap();
            let s = ood_score(&in_model, &p, &x).unwrap();
            let h = classifier.entropy(&x).unwrap();
            assert!((s.value - h).abs() <= 1e-12, "{} vs {h}", s.value);
        }
    }

    #[test]
    fn local_proxy_equal_to_full_model_scores_zero() {
        let ds = gen_gaussian(&GaussianSpec::isotropic(2, 0.0, 1.0).unwrap(), 300, Seed(112))
            .unwrap();
        let model = DensityModel::DiagGaussian(fit_diag_gaussian(&ds, 1e-6).unwrap());
        let p = build_local_proxy(model.clone());
        let s = score_dataset(&model, &p, &ds).unwrap();
        assert!(s.iter().all(|v| v.value == 0.0));
        let a = auroc(&score_values(&s), &score_values(&s)).unwrap();
        assert_eq!(a, 0.5);
    }

    #[test]
    fn proxies_stay_finite_far_from_training_data() {
        let ds = gen_gaussian(&GaussianSpec::isotropic(2, 0.0, 1.0).unwrap(), 300, Seed(113))
            .unwrap();
        let far = Sample::new(vec![1e5, -1e5]).unwrap();
        let proxies = [
            build_constant_proxy(0.0),
            build_auxiliary_proxy(&ds, &ModelSpec::histogram(8, 1.0), Seed(114)).unwrap(),
            build_background_proxy(&ds, 0.5, &ModelSpec::diag_gaussian(), Seed(115)).unwrap(),
        ];
        for p in &proxies {
            assert!(p.unnormalized_log_density(&far).unwrap().is_finite());
        }
    }
}
