use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, DiagGaussian, GaussianMixture};
use crate::{Dataset, Error, Result, Seed};

/// Outlier-exposure fine-tuning configuration.
///
/// The loss per paired example is `max(0, margin - log p(x_in) + log
/// p(x_out))`. `margin = None` resolves to the data dimension, extending
/// the pixel-count choice to generic vectors; the resolved value is
/// recorded in the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineTuneConfig {
    pub margin: Option<f64>,
    pub epochs: usize,
    pub step: f64,
    pub batch_size: usize,
    pub seed: Seed,
}

impl FineTuneConfig {
    pub fn new(epochs: usize, step: f64, seed: Seed) -> Self {
        FineTuneConfig {
            margin: None,
            epochs,
            step,
            batch_size: 64,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FineTuneOutcome {
    pub model: DensityModel,
    /// Mean hinge loss after each accepted epoch, led by the initial loss.
    /// Non-increasing by construction (failed epochs are retried at half
    /// the step).
    pub loss_trace: Vec<f64>,
    pub resolved_margin: f64,
    pub final_step: f64,
}

/// Differentiable parameters: sigma is carried as `rho = ln(sigma)` and
/// mixture weights as logits, so gradient steps cannot leave the valid
/// region.
#[derive(Debug, Clone)]
enum Params {
    Gaussian {
        mu: Vec<f64>,
        rho: Vec<f64>,
    },
    Mixture {
        omega: Vec<f64>,
        mu: Vec<Vec<f64>>,
        rho: Vec<Vec<f64>>,
    },
}

const RHO_FLOOR: f64 = -13.815510557964274; // ln(1e-6)

impl Params {
    fn from_model(model: &DensityModel) -> Result<Self> {
        match model {
            DensityModel::DiagGaussian(g) => Ok(Params::Gaussian {
                mu: g.mean().to_vec(),
                rho: g.sigma().iter().map(|s| s.ln()).collect(),
            }),
            DensityModel::GaussianMixture(m) => Ok(Params::Mixture {
                omega: m.weights().iter().map(|w| w.ln()).collect(),
                mu: m.components().iter().map(|c| c.mean().to_vec()).collect(),
                rho: m
                    .components()
                    .iter()
                    .map(|c| c.sigma().iter().map(|s| s.ln()).collect())
                    .collect(),
            }),
            other => Err(Error::UnsupportedModel {
                op: "outlier-exposure fine-tuning",
                kind: other.kind_name().to_string(),
            }),
        }
    }

    fn to_model(&self) -> Result<DensityModel> {
        match self {
            Params::Gaussian { mu, rho } => Ok(DensityModel::DiagGaussian(DiagGaussian::new(
                mu.clone(),
                rho.iter().map(|r| r.exp()).collect(),
            )?)),
            Params::Mixture { omega, mu, rho } => {
                let max = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut weights: Vec<f64> = omega.iter().map(|o| (o - max).exp()).collect();
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                let components = mu
                    .iter()
                    .zip(rho)
                    .map(|(m, r)| {
                        DiagGaussian::new(m.clone(), r.iter().map(|v| v.exp()).collect())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DensityModel::GaussianMixture(GaussianMixture::new(
                    weights, components,
                )?))
            }
        }
    }

    fn zeros_like(&self) -> Params {
        match self {
            Params::Gaussian { mu, rho } => Params::Gaussian {
                mu: vec![0.0; mu.len()],
                rho: vec![0.0; rho.len()],
            },
            Params::Mixture { omega, mu, rho } => Params::Mixture {
                omega: vec![0.0; omega.len()],
                mu: mu.iter().map(|m| vec![0.0; m.len()]).collect(),
                rho: rho.iter().map(|r| vec![0.0; r.len()]).collect(),
            },
        }
    }

    /// Log-density at `x`; when `grad` is given, accumulates
    /// `scale * d(log p)/d(theta)` into it.
    fn log_density(&self, x: &[f64], grad: Option<(&mut Params, f64)>) -> f64 {
        match self {
            Params::Gaussian { mu, rho } => {
                let (lp, gmu, grho) = gaussian_lp_grad(mu, rho, x);
                if let Some((Params::Gaussian { mu: gm, rho: gr }, scale)) = grad {
                    for (acc, g) in gm.iter_mut().zip(&gmu) {
                        *acc += scale * g;
                    }
                    for (acc, g) in gr.iter_mut().zip(&grho) {
                        *acc += scale * g;
                    }
                }
                lp
            }
            Params::Mixture { omega, mu, rho } => {
                let k = omega.len();
                let max_o = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let log_norm: f64 = omega.iter().map(|o| (o - max_o).exp()).sum::<f64>().ln() + max_o;
                let mut terms = Vec::with_capacity(k);
                let mut comps = Vec::with_capacity(k);
                for i in 0..k {
                    let (lp, gmu, grho) = gaussian_lp_grad(&mu[i], &rho[i], x);
                    terms.push(omega[i] - log_norm + lp);
                    comps.push((gmu, grho));
                }
                let max_t = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max_t + terms.iter().map(|t| (t - max_t).exp()).sum::<f64>().ln();
                if let Some((
                    Params::Mixture {
                        omega: go,
                        mu: gm,
                        rho: gr,
                    },
                    scale,
                )) = grad
                {
                    let weights: Vec<f64> = omega.iter().map(|o| (o - log_norm).exp()).collect();
                    for i in 0..k {
                        let r = (terms[i] - lse).exp();
                        go[i] += scale * (r - weights[i]);
                        for (acc, g) in gm[i].iter_mut().zip(&comps[i].0) {
                            *acc += scale * r * g;
                        }
                        for (acc, g) in gr[i].iter_mut().zip(&comps[i].1) {
                            *acc += scale * r * g;
                        }
                    }
                }
                lse
            }
        }
    }

    fn step(&mut self, grad: &Params, step: f64) {
        match (self, grad) {
            (Params::Gaussian { mu, rho }, Params::Gaussian { mu: gm, rho: gr }) => {
                for (p, g) in mu.iter_mut().zip(gm) {
                    *p -= step * g;
                }
                for (p, g) in rho.iter_mut().zip(gr) {
                    *p = (*p - step * g).max(RHO_FLOOR);
                }
            }
            (
                Params::Mixture { omega, mu, rho },
                Params::Mixture {
                    omega: go,
                    mu: gm,
                    rho: gr,
                },
            ) => {
                for (p, g) in omega.iter_mut().zip(go) {
                    *p -= step * g;
                }
                for (row, grow) in mu.iter_mut().zip(gm) {
                    for (p, g) in row.iter_mut().zip(grow) {
                        *p -= step * g;
                    }
                }
                for (row, grow) in rho.iter_mut().zip(gr) {
                    for (p, g) in row.iter_mut().zip(grow) {
                        *p = (*p - step * g).max(RHO_FLOOR);
                    }
                }
            }
            _ => unreachable!("parameter shapes are fixed per fine-tune run"),
        }
    }
}

fn gaussian_lp_grad(mu: &[f64], rho: &[f64], x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut lp = 0.0;
    let mut gmu = Vec::with_capacity(mu.len());
    let mut grho = Vec::with_capacity(rho.len());
    for ((&m, &r), &xi) in mu.iter().zip(rho).zip(x) {
        let sigma = r.exp();
        let z = (xi - m) / sigma;
        lp += -0.5 * ln_2pi - r - 0.5 * z * z;
        gmu.push(z / sigma);
        grho.push(z * z - 1.0);
    }
    (lp, gmu, grho)
}

/// Fine-tune a Gaussian-family model with the outlier-exposure hinge loss
/// over seeded, fixed-order paired mini-batches of `in_ds` and `aux_ds`.
///
/// After each epoch the full training loss is evaluated; an epoch that
/// increased it is rolled back and retried at half the step, so the
/// recorded loss trace never increases. Histogram and Markov backends are
/// rejected (no smooth parameter gradients). The input model is untouched.
pub fn finetune_outlier_exposure(
    model: &DensityModel,
    in_ds: &Dataset,
    aux_ds: &Dataset,
    cfg: &FineTuneConfig,
) -> Result<FineTuneOutcome> {
    if in_ds.is_empty() || aux_ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if in_ds.dim() != aux_ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: in_ds.dim(),
            found: aux_ds.dim(),
        });
    }
    if model.dim() != in_ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: in_ds.dim(),
        });
    }
    if cfg.epochs == 0 {
        return Err(Error::invalid("fine-tuning needs at least one epoch"));
    }
    if !(cfg.step.is_finite() && cfg.step > 0.0) {
        return Err(Error::invalid("step size must be strictly positive"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let margin = match cfg.margin {
        Some(c) => {
            if !c.is_finite() {
                return Err(Error::invalid("margin must be finite"));
            }
            c
        }
        None => in_ds.dim() as f64,
    };

    let mut params = Params::from_model(model)?;

    // Fixed seeded pairing: one permutation per side, consumed in order
    // every epoch.
    let n_pairs = in_ds.len().min(aux_ds.len());
    let mut rng = cfg.seed.rng();
    let mut in_idx: Vec<usize> = (0..in_ds.len()).collect();
    let mut aux_idx: Vec<usize> = (0..aux_ds.len()).collect();
    for i in 0..n_pairs {
        let j = rng.random_range(i..in_idx.len());
        in_idx.swap(i, j);
        let j = rng.random_range(i..aux_idx.len());
        aux_idx.swap(i, j);
    }
    let pairs: Vec<(&[f64], &[f64])> = (0..n_pairs)
        .map(|i| {
            (
                in_ds.samples()[in_idx[i]].values(),
                aux_ds.samples()[aux_idx[i]].values(),
            )
        })
        .collect();

    let full_loss = |p: &Params| -> f64 {
        pairs
            .iter()
            .map(|(xin, xout)| {
                (margin - p.log_density(xin, None) + p.log_density(xout, None)).max(0.0)
            })
            .sum::<f64>()
            / n_pairs as f64
    };

    let mut step = cfg.step;
    let mut loss_prev = full_loss(&params);
    let mut trace = vec![loss_prev];

    let mut epoch = 0;
    while epoch < cfg.epochs {
        let mut candidate = params.clone();
        for batch in pairs.chunks(cfg.batch_size) {
            let mut grad = candidate.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            let mut any_active = false;
            for (xin, xout) in batch {
                let h = margin - candidate.log_density(xin, None)
                    + candidate.log_density(xout, None);
                if h > 0.0 {
                    any_active = true;
                    candidate.log_density(xin, Some((&mut grad, -scale)));
                    candidate.log_density(xout, Some((&mut grad, scale)));
                }
            }
            if any_active {
                candidate.step(&grad, step);
            }
        }
        let loss = full_loss(&candidate);
        if loss <= loss_prev {
            params = candidate;
            loss_prev = loss;
            trace.push(loss);
            epoch += 1;
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }

    Ok(FineTuneOutcome {
        model: params.to_model()?,
        loss_trace: trace,
        resolved_margin: margin,
        final_step: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{fit_diag_gaussian, fit_gmm};
    use crate::generate::{gen_gaussian, GaussianSpec};

    fn setup_1d() -> (DensityModel, Dataset, Dataset) {
        let in_ds = gen_gaussian(&GaussianSpec::isotropic(1, 0.0, 1.0).unwrap(), 2_000, Seed(120))
            .unwrap();
        let aux = gen_gaussian(
            &GaussianSpec::isotropic(1, 0.0, 0.01).unwrap(),
            2_000,
            Seed(121),
        )
        .unwrap();
        let model = DensityModel::DiagGaussian(fit_diag_gaussian(&in_ds, 1e-6).unwrap());
        (model, in_ds, aux)
    }

    #[test]
    fn pre_satisfied_margin_leaves_parameters_unchanged() {
        // in-data far above aux in likelihood, tiny margin: hinge inactive.
        let in_ds = gen_gaussian(&GaussianSpec::isotropic(1, 0.0, 0.1).unwrap(), 500, Seed(122))
            .unwrap();
        let aux = gen_gaussian(&GaussianSpec::isotropic(1, 50.0, 0.1).unwrap(), 500, Seed(123))
            .unwrap();
        let model = DensityModel::DiagGaussian(fit_diag_gaussian(&in_ds, 1e-6).unwrap());
        let mut cfg = FineTuneConfig::new(5, 0.05, Seed(124));
        cfg.margin = Some(-1e9);
        let out = finetune_outlier_exposure(&model, &in_ds, &aux, &cfg).unwrap();
        assert_eq!(out.model, model);
        assert!(out.loss_trace.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn loss_trace_is_non_increasing() {
        let (model, in_ds, aux) = setup_1d();
        let cfg = FineTuneConfig::new(30, 0.05, Seed(125));
        let out = finetune_outlier_exposure(&model, &in_ds, &aux, &cfg).unwrap();
        for w in out.loss_trace.windows(2) {
            assert!(w[1] <= w[0], "loss increased: {w:?}");
        }
        assert!(out.loss_trace.len() > 1);
    }

    #[test]
    fn held_out_margin_does_not_degrade() {
        let (model, in_ds, aux) = setup_1d();
        let cfg = FineTuneConfig::new(30, 0.05, Seed(126));
        let out = finetune_outlier_exposure(&model, &in_ds, &aux, &cfg).unwrap();
        let held_in = gen_gaussian(&GaussianSpec::isotropic(1, 0.0, 1.0).unwrap(), 2_000, Seed(127))
            .unwrap();
        let held_out = gen_gaussian(
            &GaussianSpec::isotropic(1, 0.0, 0.01).unwrap(),
            2_000,
            Seed(128),
        )
        .unwrap();
        let margin = |m: &DensityModel| {
            m.mean_log_density(&held_in).unwrap() - m.mean_log_density(&held_out).unwrap()
        };
        let before = margin(&model);
        let after = margin(&out.model);
        assert!(after >= before - 1e-6, "margin {before} -> {after}");
    }

    #[test]
    fn mixture_backend_is_supported() {
        let (_, in_ds, aux) = setup_1d();
        let gmm = fit_gmm(&in_ds, 2, 50, 1e-8, 1e-6, Seed(129)).unwrap().model;
        let model = DensityModel::GaussianMixture(gmm);
        let cfg = FineTuneConfig::new(10, 0.02, Seed(130));
        let out = finetune_outlier_exposure(&model, &in_ds, &aux, &cfg).unwrap();
        for w in out.loss_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        if let DensityModel::GaussianMixture(m) = &out.model {
            let sum: f64 = m.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        } else {
            panic!("expected a mixture back");
        }
    }

    #[test]
    fn non_differentiable_backends_are_rejected() {
        let (_, in_ds, aux) = setup_1d();
        let hist = crate::density::ModelSpec::histogram(5, 1.0)
            .fit(&in_ds, Seed(131))
            .unwrap();
        let cfg = FineTuneConfig::new(3, 0.05, Seed(132));
        assert!(matches!(
            finetune_outlier_exposure(&hist, &in_ds, &aux, &cfg),
            Err(Error::UnsupportedModel { .. })
        ));
    }
}
