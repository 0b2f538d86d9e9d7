//! Binary classification metrics over raw model scores.

use std::cmp::Ordering;

use crate::error::{ElmError, Result};

/// Probability clip used by [`logloss`].
pub const LOGLOSS_EPS: f64 = 1e-7;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn check_lengths(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(ElmError::Shape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(())
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l != 0).count();
    (pos, labels.len() - pos)
}

/// Area under the ROC curve from the Mann-Whitney rank statistic, with
/// tied scores sharing their average rank.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(ElmError::UndefinedMetric(format!(
            "AUC needs both classes ({pos} positives, {neg} negatives)"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k] != 0).count();
        rank_sum += mean_rank * tied_pos as f64;
        i = j;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Mean binary cross-entropy with scores clipped to `[ε, 1 − ε]`.
pub fn logloss(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(ElmError::UndefinedMetric("log loss of no instances".into()));
    }
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            // NaN falls to the clip floor
            let p = if s.is_nan() { LOGLOSS_EPS } else { s.clamp(LOGLOSS_EPS, 1.0 - LOGLOSS_EPS) };
            if y != 0 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(total / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Precision, recall and F1 of the positive class, predicting 1 iff
/// `score ≥ threshold`. Empty denominators give 0.
pub fn prf1(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Prf1> {
    check_lengths(scores, labels)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(Prf1 {
        precision,
        recall,
        f1: f1_of(precision, recall),
    })
}

/// Threshold among the distinct score values maximizing F1; ties go to the
/// larger threshold.
pub fn tune_threshold(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (pos, _) = class_counts(labels);
    if pos == 0 {
        return Err(ElmError::UndefinedMetric("no positive labels to tune F1 on".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).filter(|&i| !scores[i].is_nan()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut best: Option<(f64, f64)> = None;
    let (mut tp, mut predicted) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            tp += (labels[order[i]] != 0) as usize;
            predicted += 1;
            i += 1;
        }
        let f1 = 2.0 * tp as f64 / (predicted + pos) as f64;
        if best.is_none_or(|(b, _)| f1.partial_cmp(&b) == Some(Ordering::Greater)) {
            best = Some((f1, t));
        }
    }
    best.map(|(_, t)| t)
        .ok_or_else(|| ElmError::UndefinedMetric("no finite scores".into()))
}

/// Metric row reported per split.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub logloss: f64,
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl MetricReport {
    pub fn compute(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Self> {
        let p = prf1(scores, labels, threshold)?;
        let (positives, negatives) = class_counts(labels);
        Ok(MetricReport {
            logloss: logloss(scores, labels)?,
            auc: auc(scores, labels)?,
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
            threshold,
            positives,
            negatives,
        })
    }

    pub const COLUMNS: [&'static str; 8] = [
        "logloss",
        "auc",
        "precision",
        "recall",
        "f1",
        "threshold",
        "positives",
        "negatives",
    ];

    pub fn values(&self) -> [String; 8] {
        [
            format!("{:.5}", self.logloss),
            format!("{:.5}", self.auc),
            format!("{:.5}", self.precision),
            format!("{:.5}", self.recall),
            format!("{:.5}", self.f1),
            format!("{}", self.threshold),
            self.positives.to_string(),
            self.negatives.to_string(),
        ]
    }

    /// `key = value` lines with full precision, keys prefixed by `prefix`.
    pub fn key_values(&self, prefix: &str) -> String {
        let full = [
            self.logloss.to_string(),
            self.auc.to_string(),
            self.precision.to_string(),
            self.recall.to_string(),
            self.f1.to_string(),
            self.threshold.to_string(),
            self.positives.to_string(),
            self.negatives.to_string(),
        ];
        Self::COLUMNS
            .iter()
            .zip(full)
            .map(|(k, v)| format!("{prefix}{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            if labels[i] == 0 {
                continue;
            }
            for (j, &sj) in scores.iter().enumerate() {
                if labels[j] != 0 {
                    continue;
                }
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
        num / den
    }

    #[test]
    fn perfect_ranking() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn all_tied_is_half() {
        assert_eq!(auc(&[0.3; 7], &[0, 1, 0, 1, 1, 0, 0]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_undefined() {
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(ElmError::UndefinedMetric(_))));
        assert!(auc(&[0.1], &[0, 1]).is_err());
    }

    #[test]
    fn rank_auc_matches_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 500;
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..40) as f64) / 10.0).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_bool(0.3) as u8).collect();
        let a = auc(&scores, &labels).unwrap();
        assert!((a - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn logloss_values() {
        let near = logloss(&[1.0], &[1]).unwrap();
        assert!((near - -(1.0 - LOGLOSS_EPS).ln()).abs() < 1e-18);
        assert!(near < 1.1e-7);
        for y in [0, 1] {
            assert!((logloss(&[0.5], &[y]).unwrap() - 2f64.ln()).abs() < 1e-15);
        }
        let clipped = logloss(&[7.3], &[0]).unwrap();
        assert!((clipped - -(LOGLOSS_EPS.ln())).abs() < 1e-9);
        assert!((clipped - 16.118).abs() < 1e-3);
        assert!(logloss(&[], &[]).is_err());
        assert!(logloss(&[0.2, -3.0, f64::NAN], &[1, 0, 1]).unwrap().is_finite());
    }

    #[test]
    fn prf1_cases() {
        let none = prf1(&[0.1, 0.2, 0.3], &[1, 0, 1], 0.5).unwrap();
        assert_eq!((none.precision, none.f1), (0.0, 0.0));
        let perfect = prf1(&[0.9, 0.1, 0.7], &[1, 0, 1], 0.5).unwrap();
        assert_eq!((perfect.precision, perfect.recall, perfect.f1), (1.0, 1.0, 1.0));
        // TP = 1, FP = 1, FN = 3
        let p = prf1(&[0.9, 0.8, 0.1, 0.1, 0.1], &[1, 0, 1, 1, 1], 0.5).unwrap();
        assert_eq!(p.precision, 0.5);
        assert_eq!(p.recall, 0.25);
        assert!((p.f1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(prf1(&[0.1], &[1, 0], 0.5).is_err());
    }

    #[test]
    fn tuned_threshold_separates() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.9];
        let labels = [0, 0, 0, 1, 1];
        let t = tune_threshold(&scores, &labels).unwrap();
        assert_eq!(prf1(&scores, &labels, t).unwrap().f1, 1.0);
        // Ties go to the larger threshold: 0.8 and any lower value down to 0.4 exclusive both separate.
        assert_eq!(t, 0.8);
    }

    #[test]
    fn constant_scores_predict_everything() {
        let n = 100;
        let labels: Vec<u8> = (0..n).map(|i| (i < 17) as u8).collect();
        let scores = vec![0.42; n];
        let t = tune_threshold(&scores, &labels).unwrap();
        assert!(t <= 0.42);
        let f1 = prf1(&scores, &labels, t).unwrap().f1;
        assert!((f1 - 2.0 * 0.17 / 1.17).abs() < 1e-12);
    }

    #[test]
    fn tuned_beats_random_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scores: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<u8> = scores.iter().map(|s| rng.random_bool(0.2 + 0.5 * s) as u8).collect();
        let t = tune_threshold(&scores, &labels).unwrap();
        let best = prf1(&scores, &labels, t).unwrap().f1;
        for _ in 0..100 {
            let r = rng.random_range(-0.1..1.1);
            assert!(best >= prf1(&scores, &labels, r).unwrap().f1 - 1e-15);
        }
    }

    #[test]
    fn tune_needs_positives() {
        assert!(matches!(tune_threshold(&[0.1, 0.5], &[0, 0]), Err(ElmError::UndefinedMetric(_))));
    }

    #[test]
    fn report() {
        let r = MetricReport::compute(&[0.9, 0.2, 0.6, 0.4], &[1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.f1, 1.0);
        assert_eq!((r.positives, r.negatives), (2, 2));
        let kv = r.key_values("validation.");
        assert!(kv.contains("validation.auc = 1\n"));
        assert_eq!(kv.lines().count(), 8);
    }

    proptest! {
        #[test]
        fn auc_invariant_under_increasing_maps(
            data in proptest::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1 as u8).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let base = auc(&scores, &labels).unwrap();
            let mapped: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            prop_assert!((auc(&mapped, &labels).unwrap() - base).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn auc_of_negated_scores_complements(
            data in proptest::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1 as u8).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[0] != w[1]));
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let sum = auc(&scores, &labels).unwrap() + auc(&neg, &labels).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn prf1_bounded_and_recall_monotone(
            data in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 1..80),
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1 as u8).collect();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let a = prf1(&scores, &labels, lo).unwrap();
            let b = prf1(&scores, &labels, hi).unwrap();
            for v in [a.precision, a.recall, a.f1, b.precision, b.recall, b.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(a.recall >= b.recall);
        }

        #[test]
        fn logloss_non_negative(data in proptest::collection::vec((-3.0f64..3.0, any::<bool>()), 1..50)) {
            let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1 as u8).collect();
            prop_assert!(logloss(&scores, &labels).unwrap() >= 0.0);
        }
    }
}
