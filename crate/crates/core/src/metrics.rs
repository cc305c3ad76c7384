//! Rank-based and threshold-based evaluation of OOD detectors.

use serde::{Deserialize, Serialize};

use crate::detector::DecisionRule;
use crate::{Error, Result};

/// Convention used by every report in this crate.
pub const CONVENTION_NOTE: &str = "score = log p_out_proxy(x) - log p_in(x); higher means more \
     OOD; OOD is the positive class; AUROC ties receive half credit; fpr_at_tpr reports the \
     smallest FPR among swept thresholds reaching the TPR level";

/// AUROC of OOD scores against in-distribution scores.
///
/// Defined as the mean over all (ood, in) pairs of 1 if the OOD score is
/// larger, 1/2 on ties, 0 otherwise (the Mann-Whitney statistic), computed
/// by sorting in O(n log n). Tie credit is accumulated in exact integer
/// half-pairs and the result is snapped to the 2^-52 grid so that
/// `auroc(a, b) + auroc(b, a) == 1.0` holds exactly.
pub fn auroc(ood_scores: &[f64], in_scores: &[f64]) -> Result<f64> {
    let u2 = pair_stat_doubled(ood_scores, in_scores)?;
    let nm = ood_scores.len() as i128 * in_scores.len() as i128;
    Ok(auroc_from_doubled(u2, nm))
}

/// Twice the Mann-Whitney U statistic (win = 2, tie = 1), exactly.
fn pair_stat_doubled(ood_scores: &[f64], in_scores: &[f64]) -> Result<u128> {
    if ood_scores.is_empty() || in_scores.is_empty() {
        return Err(Error::invalid("auroc needs non-empty score lists"));
    }
    let mut all: Vec<(f64, bool)> = ood_scores
        .iter()
        .map(|&s| (s, true))
        .chain(in_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut u2: u128 = 0;
    let mut in_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        let mut tie_ood: u128 = 0;
        let mut tie_in: u128 = 0;
        while j < all.len() && all[j].0 == all[i].0 {
            if all[j].1 {
                tie_ood += 1;
            } else {
                tie_in += 1;
            }
            j += 1;
        }
        u2 += tie_ood * (2 * in_below + tie_in);
        in_below += tie_in;
        i = j;
    }
    Ok(u2)
}

fn auroc_from_doubled(u2: u128, nm: i128) -> f64 {
    // auroc = 1/2 + (u2 - nm) / (4 nm), with the offset snapped to the
    // 2^-52 grid; 1/2 +- q is then exact in f64.
    let s = u2 as i128 - nm;
    let q = s as f64 / (2.0 * nm as f64);
    let snapped = (q * 2f64.powi(52)).round() / 2f64.powi(52);
    0.5 + snapped
}

/// Brute-force pairwise AUROC, kept as an independent oracle for the
/// sort-based implementation. Quadratic; use only on small inputs.
pub fn auroc_bruteforce(ood_scores: &[f64], in_scores: &[f64]) -> Result<f64> {
    if ood_scores.is_empty() || in_scores.is_empty() {
        return Err(Error::invalid("auroc needs non-empty score lists"));
    }
    let mut u2: u128 = 0;
    for &o in ood_scores {
        for &i in in_scores {
            if o > i {
                u2 += 2;
            } else if o == i {
                u2 += 1;
            }
        }
    }
    let nm = ood_scores.len() as i128 * in_scores.len() as i128;
    Ok(auroc_from_doubled(u2, nm))
}

/// ROC curve swept over the union of observed scores (descending), from
/// (0,0) to (1,1). Both coordinates are non-decreasing.
pub fn roc_points(ood_scores: &[f64], in_scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    if ood_scores.is_empty() || in_scores.is_empty() {
        return Err(Error::invalid("roc needs non-empty score lists"));
    }
    let mut ood = ood_scores.to_vec();
    let mut inn = in_scores.to_vec();
    ood.sort_by(|a, b| b.total_cmp(a));
    inn.sort_by(|a, b| b.total_cmp(a));
    let (n_o, n_i) = (ood.len() as f64, inn.len() as f64);

    let mut points = vec![(0.0, 0.0)];
    let (mut io, mut ii) = (0usize, 0usize);
    while io < ood.len() || ii < inn.len() {
        // Next threshold: the largest not-yet-consumed score.
        let t = match (ood.get(io), inn.get(ii)) {
            (Some(&a), Some(&b)) => a.max(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while io < ood.len() && ood[io] >= t {
            io += 1;
        }
        while ii < inn.len() && inn[ii] >= t {
            ii += 1;
        }
        points.push((ii as f64 / n_i, io as f64 / n_o));
    }
    Ok(points)
}

/// Trapezoidal area under a ROC polyline.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Smallest FPR among swept thresholds whose TPR reaches `level`.
pub fn fpr_at_tpr(ood_scores: &[f64], in_scores: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::invalid("tpr level must be in (0, 1]"));
    }
    let points = roc_points(ood_scores, in_scores)?;
    for (fpr, tpr) in points {
        if tpr >= level {
            return Ok(fpr);
        }
    }
    Ok(1.0)
}

/// Empirical type-I error (in-distribution scores classified out) and
/// type-II error (OOD scores classified in) under a decision rule.
pub fn error_rates(ood_scores: &[f64], in_scores: &[f64], rule: &DecisionRule) -> Result<(f64, f64)> {
    if ood_scores.is_empty() || in_scores.is_empty() {
        return Err(Error::invalid("error rates need non-empty score lists"));
    }
    let type1 = in_scores.iter().filter(|&&s| s > rule.theta).count() as f64
        / in_scores.len() as f64;
    let type2 = ood_scores.iter().filter(|&&s| s <= rule.theta).count() as f64
        / ood_scores.len() as f64;
    Ok((type1, type2))
}

/// Full evaluation of a score split: AUROC, ROC, FPR@TPR95 and the error
/// rates at a threshold calibrated on the in-distribution scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub fpr_at_tpr95: f64,
    /// Type-I level the threshold was calibrated at.
    pub calibration_level: f64,
    pub threshold: f64,
    pub type1: f64,
    pub type2: f64,
    pub n_in: usize,
    pub n_out: usize,
    pub convention: String,
    pub roc: Vec<(f64, f64)>,
}

pub fn eval_report(ood_scores: &[f64], in_scores: &[f64], level: f64) -> Result<EvalReport> {
    let rule = crate::detector::calibrate_threshold_values(in_scores, level)?;
    let (type1, type2) = error_rates(ood_scores, in_scores, &rule)?;
    Ok(EvalReport {
        auroc: auroc(ood_scores, in_scores)?,
        fpr_at_tpr95: fpr_at_tpr(ood_scores, in_scores, 0.95)?,
        calibration_level: level,
        threshold: rule.theta,
        type1,
        type2,
        n_in: in_scores.len(),
        n_out: ood_scores.len(),
        convention: CONVENTION_NOTE.to_string(),
        roc: roc_points(ood_scores, in_scores)?,
    })
}

/// Render ROC points as `fpr,tpr` CSV.
pub fn roc_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for (fpr, tpr) in points {
        out.push_str(&format!("{fpr},{tpr}\n"));
    }
    out
}
