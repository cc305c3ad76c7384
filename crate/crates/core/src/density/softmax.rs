use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result, Sample, Seed};

/// Linear softmax classifier trained by full-batch gradient descent on
/// cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxClassifier {
    /// Distinct class labels in ascending order; row `i` of the weight
    /// matrix belongs to `class_labels[i]`.
    class_labels: Vec<u32>,
    /// classes x dim.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    meta: TrainMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: usize,
    pub step: f64,
    pub seed: Seed,
}

#[derive(Debug, Clone)]
pub struct SoftmaxFit {
    pub classifier: SoftmaxClassifier,
    /// Mean cross-entropy after each epoch, preceded by the initial loss.
    pub loss_trace: Vec<f64>,
}

impl SoftmaxClassifier {
    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_labels(&self) -> &[u32] {
        &self.class_labels
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn meta(&self) -> &TrainMeta {
        &self.meta
    }

    /// Class probabilities at `x` (positive, summing to one).
    pub fn predict_proba(&self, x: &Sample) -> Result<Vec<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(softmax_probs(&self.weights, &self.bias, x.values()))
    }

    /// Entropy of the predicted class distribution, in nats.
    pub fn entropy(&self, x: &Sample) -> Result<f64> {
        let probs = self.predict_proba(x)?;
        Ok(entropy_of(&probs))
    }
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

fn softmax_probs(weights: &[Vec<f64>], bias: &[f64], x: &[f64]) -> Vec<f64> {
    let mut logits: Vec<f64> = weights
        .iter()
        .zip(bias)
        .map(|(w, b)| w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    for l in logits.iter_mut() {
        *l /= total;
    }
    logits
}

/// Mean cross-entropy and its gradient for a weight matrix and bias over
/// `(features, class index)` examples. Shared by the trainer and by
/// finite-difference gradient checks.
pub fn softmax_loss_and_grad(
    weights: &[Vec<f64>],
    bias: &[f64],
    examples: &[(Vec<f64>, usize)],
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let classes = weights.len();
    let dim = weights[0].len();
    let n = examples.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![vec![0.0; dim]; classes];
    let mut grad_b = vec![0.0; classes];
    for (x, y) in examples {
        let probs = softmax_probs(weights, bias, x);
        loss -= probs[*y].max(f64::MIN_POSITIVE).ln();
        for c in 0..classes {
            let delta = probs[c] - f64::from(c == *y);
            for (g, xi) in grad_w[c].iter_mut().zip(x) {
                *g += delta * xi;
            }
            grad_b[c] += delta;
        }
    }
    loss /= n;
    for row in &mut grad_w {
        for g in row.iter_mut() {
            *g /= n;
        }
    }
    for g in &mut grad_b {
        *g /= n;
    }
    (loss, grad_w, grad_b)
}

/// Train a softmax classifier on a labeled dataset. Requires at least two
/// distinct classes. Zero-initialized, full-batch, fixed step; the seed is
/// recorded as training metadata.
pub fn fit_softmax(ds: &Dataset, epochs: usize, step: f64, seed: Seed) -> Result<SoftmaxFit> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !ds.is_labeled() {
        return Err(Error::invalid("softmax training needs a labeled dataset"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step size must be strictly positive"));
    }
    let class_labels = ds.distinct_labels();
    if class_labels.len() < 2 {
        return Err(Error::invalid(
            "softmax training needs at least two distinct classes",
        ));
    }
    let class_index = |label: u32| class_labels.binary_search(&label).unwrap();
    let examples: Vec<(Vec<f64>, usize)> = ds
        .iter()
        .map(|s| (s.values().to_vec(), class_index(s.label().unwrap())))
        .collect();

    let classes = class_labels.len();
    let dim = ds.dim();
    let mut weights = vec![vec![0.0; dim]; classes];
    let mut bias = vec![0.0; classes];
    let mut trace = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let (loss, grad_w, grad_b) = softmax_loss_and_grad(&weights, &bias, &examples);
        trace.push(loss);
        for (row, grad) in weights.iter_mut().zip(&grad_w) {
            for (w, g) in row.iter_mut().zip(grad) {
                *w -= step * g;
            }
        }
        for (b, g) in bias.iter_mut().zip(&grad_b) {
            *b -= step * g;
        }
    }
    let (final_loss, _, _) = softmax_loss_and_grad(&weights, &bias, &examples);
    trace.push(final_loss);

    Ok(SoftmaxFit {
        classifier: SoftmaxClassifier {
            class_labels,
            weights,
            bias,
            meta: TrainMeta { epochs, step, seed },
        },
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_gaussian, GaussianSpec};

    fn labeled_clusters(n_each: usize, centers: &[f64], sd: f64, seed: Seed) -> Dataset {
        let mut ds = Dataset::empty(1).unwrap();
        for (label, &c) in centers.iter().enumerate() {
            let part = gen_gaussian(
                &GaussianSpec::isotropic(1, c, sd).unwrap(),
                n_each,
                seed.child(label as u64),
            )
            .unwrap();
            for s in part.iter() {
                ds.push(Sample::with_label(s.values().to_vec(), Some(label as u32)).unwrap())
                    .unwrap();
            }
        }
        ds
    }

    #[test]
    fn uniform_probabilities_have_max_entropy() {
        let probs = vec![0.25; 4];
        assert!((entropy_of(&probs) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_hot_probabilities_have_zero_entropy() {
        assert_eq!(entropy_of(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        let mut ds = Dataset::empty(1).unwrap();
        for _ in 0..5 {
            ds.push(Sample::with_label(vec![0.0], Some(1)).unwrap())
                .unwrap();
        }
        assert!(fit_softmax(&ds, 10, 0.1, Seed(70)).is_err());
    }

    #[test]
    fn loss_trace_is_non_increasing_at_suitable_step() {
        let ds = labeled_clusters(500, &[-1.0, 1.0], 1.0, Seed(71));
        let fit = fit_softmax(&ds, 200, 0.5, Seed(72)).unwrap();
        for w in fit.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "loss increased: {w:?}");
        }
    }

    #[test]
    fn decision_boundary_matches_analytic_bayes_point() {
        // N(0,1) vs N(1,1), balanced: equal-probability point at 0.5.
        let mut ds = Dataset::empty(1).unwrap();
        for (label, c) in [(0u32, 0.0), (1u32, 1.0)] {
            let part = gen_gaussian(
                &GaussianSpec::isotropic(1, c, 1.0).unwrap(),
                25_000,
                Seed(73).child(u64::from(label)),
            )
            .unwrap();
            for s in part.iter() {
                ds.push(Sample::with_label(s.values().to_vec(), Some(label)).unwrap())
                    .unwrap();
            }
        }
        let fit = fit_softmax(&ds, 400, 1.0, Seed(74)).unwrap();
        let c = &fit.classifier;
        // Boundary: (w1 - w0) x + (b1 - b0) = 0.
        let dw = c.weights()[1][0] - c.weights()[0][0];
        let db = c.bias()[1] - c.bias()[0];
        let boundary = -db / dw;
        assert!((boundary - 0.5).abs() < 0.05, "boundary {boundary}");
    }

    #[test]
    fn entropy_stays_in_range() {
        let ds = labeled_clusters(200, &[-2.0, 0.0, 2.0], 0.7, Seed(75));
        let fit = fit_softmax(&ds, 100, 0.5, Seed(76)).unwrap();
        let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        for x in grid {
            let h = fit.classifier.entropy(&Sample::new(vec![x]).unwrap()).unwrap();
            assert!(h >= 0.0 && h <= 3f64.ln() + 1e-12, "entropy {h}");
        }
    }
}
