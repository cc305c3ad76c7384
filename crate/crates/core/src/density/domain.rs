use serde::{Deserialize, Serialize};

use super::softmax::TrainMeta;
use crate::{Dataset, Error, Result, Sample, Seed};

/// Binary logistic classifier separating in-distribution from
/// out-distribution data.
///
/// For a well-trained classifier the logit approaches
/// `log(p_out(x)/p_in(x)) + log(n_out/n_in)`; subtracting the recorded
/// prior log-odds therefore estimates the log likelihood ratio itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainClassifier {
    weight: Vec<f64>,
    bias: f64,
    /// `ln(n_out / n_in)` recorded from the training datasets.
    prior_log_odds: f64,
    meta: TrainMeta,
}

#[derive(Debug, Clone)]
pub struct DomainFit {
    pub classifier: DomainClassifier,
    pub loss_trace: Vec<f64>,
}

impl DomainClassifier {
    pub fn dim(&self) -> usize {
        self.weight.len()
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn prior_log_odds(&self) -> f64 {
        self.prior_log_odds
    }

    /// Raw logit `w . x + b` (the log-odds of the out-domain).
    pub fn logit(&self, x: &Sample) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(self
            .weight
            .iter()
            .zip(x.values())
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.bias)
    }

    /// Prior-corrected logit: an estimate of `log(p_out(x)/p_in(x))`.
    pub fn corrected_logit(&self, x: &Sample) -> Result<f64> {
        Ok(self.logit(x)? - self.prior_log_odds)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Train a logistic domain classifier (in = 0, out = 1) by full-batch
/// gradient descent on the logistic loss. Both datasets must share one
/// dimension. The prior log-odds `ln(n_out/n_in)` is recorded for
/// likelihood-ratio correction.
pub fn fit_domain_classifier(
    in_ds: &Dataset,
    out_ds: &Dataset,
    epochs: usize,
    step: f64,
    seed: Seed,
) -> Result<DomainFit> {
    if in_ds.is_empty() || out_ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if in_ds.dim() != out_ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: in_ds.dim(),
            found: out_ds.dim(),
        });
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step size must be strictly positive"));
    }
    let dim = in_ds.dim();
    let n = (in_ds.len() + out_ds.len()) as f64;
    let examples: Vec<(&[f64], f64)> = in_ds
        .iter()
        .map(|s| (s.values(), 0.0))
        .chain(out_ds.iter().map(|s| (s.values(), 1.0)))
        .collect();

    let mut weight = vec![0.0; dim];
    let mut bias = 0.0;
    let mut trace = Vec::with_capacity(epochs + 1);
    let loss_of = |w: &[f64], b: f64| -> f64 {
        examples
            .iter()
            .map(|(x, y)| {
                let z = w.iter().zip(*x).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
                softplus(z) - y * z
            })
            .sum::<f64>()
            / n
    };
    for _ in 0..epochs {
        trace.push(loss_of(&weight, bias));
        let mut grad_w = vec![0.0; dim];
        let mut grad_b = 0.0;
        for (x, y) in &examples {
            let z = weight.iter().zip(*x).map(|(wi, xi)| wi * xi).sum::<f64>() + bias;
            let delta = sigmoid(z) - y;
            for (g, xi) in grad_w.iter_mut().zip(*x) {
                *g += delta * xi;
            }
            grad_b += delta;
        }
        for (w, g) in weight.iter_mut().zip(&grad_w) {
            *w -= step * g / n;
        }
        bias -= step * grad_b / n;
    }
    trace.push(loss_of(&weight, bias));

    let prior_log_odds = (out_ds.len() as f64 / in_ds.len() as f64).ln();
    Ok(DomainFit {
        classifier: DomainClassifier {
            weight,
            bias,
            prior_log_odds,
            meta: TrainMeta { epochs, step, seed },
        },
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_gaussian, GaussianSpec};
    use crate::metrics::auroc;

    #[test]
    fn identical_domains_are_indistinguishable() {
        let spec = GaussianSpec::isotropic(1, 0.0, 1.0).unwrap();
        let in_ds = gen_gaussian(&spec, 5_000, Seed(81)).unwrap();
        let out_ds = gen_gaussian(&spec, 5_000, Seed(82)).unwrap();
        let fit = fit_domain_classifier(&in_ds, &out_ds, 200, 1.0, Seed(83)).unwrap();
        let in_test = gen_gaussian(&spec, 4_000, Seed(84)).unwrap();
        let out_test = gen_gaussian(&spec, 4_000, Seed(85)).unwrap();
        let score = |ds: &Dataset| -> Vec<f64> {
            ds.iter()
                .map(|s| fit.classifier.logit(s).unwrap())
                .collect()
        };
        let a = auroc(&score(&out_test), &score(&in_test)).unwrap();
        assert!((a - 0.5).abs() < 0.02, "auroc {a}");
    }

    #[test]
    fn shifted_gaussians_recover_analytic_log_ratio() {
        // N(0,1) vs N(1,1): log ratio = x - 1/2, so weight 1 and bias -1/2.
        let in_ds = gen_gaussian(&GaussianSpec::isotropic(1, 0.0, 1.0).unwrap(), 50_000, Seed(86))
            .unwrap();
        let out_ds = gen_gaussian(&GaussianSpec::isotropic(1, 1.0, 1.0).unwrap(), 50_000, Seed(87))
            .unwrap();
        let fit = fit_domain_classifier(&in_ds, &out_ds, 600, 2.0, Seed(88)).unwrap();
        let c = &fit.classifier;
        assert!((c.weight()[0] - 1.0).abs() < 0.1, "weight {}", c.weight()[0]);
        assert!((c.bias() + 0.5).abs() < 0.1, "bias {}", c.bias());
        assert_eq!(c.prior_log_odds(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = gen_gaussian(&GaussianSpec::isotropic(1, 0.0, 1.0).unwrap(), 10, Seed(89)).unwrap();
        let b = gen_gaussian(&GaussianSpec::isotropic(2, 0.0, 1.0).unwrap(), 10, Seed(90)).unwrap();
        assert!(matches!(
            fit_domain_classifier(&a, &b, 10, 0.1, Seed(91)),
            Err(Error::DimensionMismatch {
                expected: 1,
                found: 2
            })
        ));
    }
}
