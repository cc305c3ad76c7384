use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result};

/// Order-`k` Markov chain over integer symbols stored as reals.
///
/// The first `k` positions of a sequence are modeled i.i.d. by the smoothed
/// unigram marginal; later positions condition on the previous `k` symbols.
/// Counts are kept sparse; additive smoothing makes every in-alphabet
/// sequence score finitely and keeps each conditional row summing to one.
/// Order 0 is the i.i.d. unigram model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    order: usize,
    alphabet: usize,
    dim: usize,
    smoothing: f64,
    unigram_total: u64,
    unigram: BTreeMap<u32, u64>,
    /// Context (packed base-`alphabet`) to next-symbol counts.
    transitions: BTreeMap<u64, Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Row {
    total: u64,
    counts: BTreeMap<u32, u64>,
}

impl MarkovModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    fn symbol(&self, values: &[f64], index: usize) -> Result<u32> {
        let v = values[index];
        if v.fract() != 0.0 || v < 0.0 || v >= self.alphabet as f64 {
            return Err(Error::OutOfAlphabet {
                index,
                value: v,
                alphabet: self.alphabet,
            });
        }
        Ok(v as u32)
    }

    fn unigram_log_prob(&self, sym: u32) -> f64 {
        let c = self.unigram.get(&sym).copied().unwrap_or(0) as f64;
        let denom = self.unigram_total as f64 + self.smoothing * self.alphabet as f64;
        ((c + self.smoothing) / denom).ln()
    }

    fn transition_log_prob(&self, ctx: u64, sym: u32) -> f64 {
        let (c, total) = match self.transitions.get(&ctx) {
            Some(row) => (row.counts.get(&sym).copied().unwrap_or(0), row.total),
            None => (0, 0),
        };
        let denom = total as f64 + self.smoothing * self.alphabet as f64;
        ((c as f64 + self.smoothing) / denom).ln()
    }

    fn pack(&self, window: &[u32]) -> u64 {
        window
            .iter()
            .fold(0u64, |acc, &s| acc * self.alphabet as u64 + s as u64)
    }

    pub(crate) fn log_density_raw(&self, values: &[f64]) -> Result<f64> {
        let syms: Vec<u32> = (0..values.len())
            .map(|i| self.symbol(values, i))
            .collect::<Result<_>>()?;
        let mut acc = 0.0;
        for (t, &sym) in syms.iter().enumerate() {
            if t < self.order {
                acc += self.unigram_log_prob(sym);
            } else {
                let ctx = self.pack(&syms[t - self.order..t]);
                acc += self.transition_log_prob(ctx, sym);
            }
        }
        Ok(acc)
    }

    fn draw_unigram<R: Rng>(&self, rng: &mut R) -> u32 {
        let denom = self.unigram_total as f64 + self.smoothing * self.alphabet as f64;
        let mut u: f64 = rng.random::<f64>() * denom;
        for sym in 0..self.alphabet as u32 {
            let c = self.unigram.get(&sym).copied().unwrap_or(0) as f64;
            let mass = c + self.smoothing;
            if u < mass {
                return sym;
            }
            u -= mass;
        }
        (self.alphabet - 1) as u32
    }

    fn draw_transition<R: Rng>(&self, ctx: u64, rng: &mut R) -> u32 {
        let (row_total, row) = match self.transitions.get(&ctx) {
            Some(row) => (row.total, Some(row)),
            None => (0, None),
        };
        let denom = row_total as f64 + self.smoothing * self.alphabet as f64;
        let mut u: f64 = rng.random::<f64>() * denom;
        for sym in 0..self.alphabet as u32 {
            let c = row
                .and_then(|r| r.counts.get(&sym).copied())
                .unwrap_or(0) as f64;
            let mass = c + self.smoothing;
            if u < mass {
                return sym;
            }
            u -= mass;
        }
        (self.alphabet - 1) as u32
    }

    pub(crate) fn sample_values<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut syms: Vec<u32> = Vec::with_capacity(self.dim);
        for t in 0..self.dim {
            let sym = if t < self.order {
                self.draw_unigram(rng)
            } else {
                let ctx = self.pack(&syms[t - self.order..t]);
                self.draw_transition(ctx, rng)
            };
            syms.push(sym);
        }
        syms.into_iter().map(f64::from).collect()
    }
}

/// Fit an order-`order` Markov chain with additive smoothing. All values
/// must be integers in `[0, alphabet)`.
pub fn fit_markov(
    ds: &Dataset,
    order: usize,
    alphabet: usize,
    smoothing: f64,
) -> Result<MarkovModel> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if alphabet < 2 {
        return Err(Error::invalid("alphabet must have at least 2 symbols"));
    }
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(Error::invalid("smoothing must be strictly positive"));
    }
    // Context indices are packed into u64.
    if (alphabet as u64).checked_pow(order as u32).is_none() {
        return Err(Error::invalid(format!(
            "alphabet^order = {alphabet}^{order} does not fit a packed context"
        )));
    }

    let mut model = MarkovModel {
        order,
        alphabet,
        dim: ds.dim(),
        smoothing,
        unigram_total: 0,
        unigram: BTreeMap::new(),
        transitions: BTreeMap::new(),
    };

    for s in ds.iter() {
        let syms: Vec<u32> = (0..s.values().len())
            .map(|i| model.symbol(s.values(), i))
            .collect::<Result<_>>()?;
        for &sym in &syms {
            *model.unigram.entry(sym).or_insert(0) += 1;
            model.unigram_total += 1;
        }
        if order >= 1 {
            for t in order..syms.len() {
                let ctx = model.pack(&syms[t - order..t]);
                let row = model.transitions.entry(ctx).or_insert_with(|| Row {
                    total: 0,
                    counts: BTreeMap::new(),
                });
                *row.counts.entry(syms[t]).or_insert(0) += 1;
                row.total += 1;
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_constant_sequences, gen_uniform_sequences};
    use crate::{Sample, Seed};

    #[test]
    fn order_zero_on_uniform_symbols_is_log_alphabet() {
        // Law of large numbers: per-symbol log mass approaches -ln(A).
        let alphabet = 16;
        let ds = gen_uniform_sequences(400, 32, alphabet, Seed(61)).unwrap();
        let m = fit_markov(&ds, 0, alphabet, 1.0).unwrap();
        let test = gen_uniform_sequences(200, 32, alphabet, Seed(62)).unwrap();
        let mut acc = 0.0;
        for s in test.iter() {
            acc += m.log_density_raw(s.values()).unwrap();
        }
        let per_symbol = acc / (200.0 * 32.0);
        let expected = -(alphabet as f64).ln();
        assert!(
            (per_symbol - expected).abs() < 0.05,
            "{per_symbol} vs {expected}"
        );
    }

    #[test]
    fn constant_sequences_concentrate_self_transitions() {
        let ds = gen_constant_sequences(50, 64, 8, Seed(63)).unwrap();
        let m = fit_markov(&ds, 1, 8, 0.01).unwrap();
        // Pick a symbol that occurs in training and check its row.
        let sym = ds.samples()[0].values()[0] as u32;
        let ctx = sym as u64;
        let lp_self = m.transition_log_prob(ctx, sym);
        assert!(lp_self > (0.99f64).ln(), "self transition {lp_self}");
    }

    #[test]
    fn out_of_alphabet_symbols_are_rejected() {
        let ds = gen_constant_sequences(5, 8, 4, Seed(64)).unwrap();
        let m = fit_markov(&ds, 1, 4, 1.0).unwrap();
        let bad = Sample::new(vec![0.0, 1.0, 9.0, 0.0, 1.0, 2.0, 3.0, 0.5]).unwrap();
        assert!(matches!(
            m.log_density_raw(bad.values()),
            Err(Error::OutOfAlphabet { index: 2, .. })
        ));
    }

    #[test]
    fn unseen_contexts_score_finitely() {
        let ds = gen_constant_sequences(10, 8, 16, Seed(65)).unwrap();
        let m = fit_markov(&ds, 1, 16, 0.5).unwrap();
        let zigzag: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 0.0 } else { 15.0 }).collect();
        assert!(m.log_density_raw(&zigzag).unwrap().is_finite());
    }

    #[test]
    fn rows_sum_to_one() {
        let ds = gen_uniform_sequences(30, 16, 6, Seed(66)).unwrap();
        let m = fit_markov(&ds, 1, 6, 0.7).unwrap();
        for ctx in 0..6u64 {
            let total: f64 = (0..6u32)
                .map(|sym| m.transition_log_prob(ctx, sym).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "row {ctx} sums to {total}");
        }
    }

    #[test]
    fn sampling_respects_alphabet_and_dim() {
        let ds = gen_uniform_sequences(30, 12, 5, Seed(67)).unwrap();
        let m = fit_markov(&ds, 1, 5, 1.0).unwrap();
        let model = crate::density::DensityModel::MarkovChain(m);
        let draws = model.sample(20, Seed(68)).unwrap();
        assert_eq!(draws.dim(), 12);
        for s in draws.iter() {
            for &v in s.values() {
                assert_eq!(v.fract(), 0.0);
                assert!((0.0..5.0).contains(&v));
            }
        }
    }
}
