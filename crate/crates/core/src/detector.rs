//! Likelihood-ratio scoring, Bayesian posteriors, and calibrated decisions.

use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::proxy::ProxyModel;
use crate::{Dataset, Error, Result, Sample};

/// Per-sample OOD score: `log p_out_proxy(x) - log p_in(x)`.
/// Higher means more OOD; 0 means the two densities agree at `x`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OodScore {
    pub value: f64,
}

impl OodScore {
    pub fn new(value: f64) -> Self {
        OodScore { value }
    }
}

/// Threshold rule: decide OOD when the score strictly exceeds `theta`.
/// `alpha` optionally records the prior OOD probability the rule was
/// derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub theta: f64,
    pub alpha: Option<f64>,
}

impl DecisionRule {
    pub fn new(theta: f64) -> Self {
        DecisionRule { theta, alpha: None }
    }

    pub fn with_alpha(theta: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha must lie strictly inside (0, 1)"));
        }
        Ok(DecisionRule {
            theta,
            alpha: Some(alpha),
        })
    }

    /// The score threshold equivalent to deciding OOD when
    /// `posterior(score, alpha) > p_star`.
    pub fn from_posterior(p_star: f64, alpha: f64) -> Result<Self> {
        if !(p_star > 0.0 && p_star < 1.0) {
            return Err(Error::invalid("posterior threshold must be in (0, 1)"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha must lie strictly inside (0, 1)"));
        }
        let theta = (p_star.ln() - (-p_star).ln_1p()) - (alpha.ln() - (-alpha).ln_1p());
        Ok(DecisionRule {
            theta,
            alpha: Some(alpha),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    In,
    Out,
}

impl Decision {
    /// `0` = in, `1` = out (the score-dump encoding).
    pub fn as_u8(self) -> u8 {
        match self {
            Decision::In => 0,
            Decision::Out => 1,
        }
    }
}

/// Exact difference of the proxy and in-model log-densities at `x`.
pub fn ood_score(in_model: &DensityModel, proxy: &ProxyModel, x: &Sample) -> Result<OodScore> {
    let lp_in = in_model.log_density(x)?;
    let lp_out = proxy.unnormalized_log_density(x)?;
    Ok(OodScore::new(lp_out - lp_in))
}

/// Score every sample of a dataset.
pub fn score_dataset(
    in_model: &DensityModel,
    proxy: &ProxyModel,
    ds: &Dataset,
) -> Result<Vec<OodScore>> {
    ds.iter().map(|s| ood_score(in_model, proxy, s)).collect()
}

/// Extract raw values from a score list.
pub fn score_values(scores: &[OodScore]) -> Vec<f64> {
    scores.iter().map(|s| s.value).collect()
}

/// Posterior probability that `x` is OOD given prior `alpha`:
/// `1 / (1 + (1 - alpha) / (alpha * LR))` with `LR = exp(score)`.
///
/// Strictly increasing in the score; returns `alpha` exactly at score 0.
/// Only calibrated when the proxy behind the score is normalized.
pub fn posterior(score: OodScore, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha must lie strictly inside (0, 1)"));
    }
    if score.value == 0.0 {
        return Ok(alpha);
    }
    // sigmoid(score + logit(alpha)), stable on both sides.
    let z = score.value + (alpha.ln() - (-alpha).ln_1p());
    Ok(if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    })
}

/// Calibrate a threshold at type-I level `a` from in-distribution
/// validation scores: the empirical (1-a)-quantile by upper nearest-rank.
/// Ties at the threshold are accepted as in-distribution.
pub fn calibrate_threshold(in_val_scores: &[OodScore], level: f64) -> Result<DecisionRule> {
    calibrate_threshold_values(&score_values(in_val_scores), level)
}

pub fn calibrate_threshold_values(in_val_scores: &[f64], level: f64) -> Result<DecisionRule> {
    if in_val_scores.is_empty() {
        return Err(Error::invalid("calibration needs at least one score"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("type-I level must be in (0, 1)"));
    }
    let mut sorted = in_val_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Upper nearest-rank (1-a)-quantile: 1-based rank floor(q n) + 1.
    let q = 1.0 - level;
    let rank = (((q * n as f64).floor() as usize) + 1).min(n);
    Ok(DecisionRule::new(sorted[rank - 1]))
}

/// Decide OOD iff the score strictly exceeds the threshold.
pub fn classify(score: OodScore, rule: &DecisionRule) -> Decision {
    if score.value > rule.theta {
        Decision::Out
    } else {
        Decision::In
    }
}

/// Render scores and decisions as `sample_index,score,decision` CSV.
pub fn score_csv(scores: &[OodScore], rule: &DecisionRule) -> String {
    let mut out = String::from("sample_index,score,decision\n");
    for (i, s) in scores.iter().enumerate() {
        let d = classify(*s, rule).as_u8();
        out.push_str(&format!("{i},{},{d}\n", s.value));
    }
    out
}

/// Parse a score-dump CSV back into score values.
pub fn parse_score_csv(text: &str, path: &std::path::Path) -> Result<Vec<f64>> {
    let err = |line: usize, message: String| Error::CsvFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    if header.trim_end_matches('\r') != "sample_index,score,decision" {
        return Err(err(
            1,
            "expected header `sample_index,score,decision`".into(),
        ));
    }
    let mut scores = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 3 {
            return Err(err(line_no, format!("expected 3 columns, found {}", cells.len())));
        }
        let v: f64 = cells[1]
            .parse()
            .map_err(|_| err(line_no, format!("non-numeric score `{}`", cells[1])))?;
        scores.push(v);
    }
    Ok(scores)
}
