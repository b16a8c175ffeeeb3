//! Classification and regression metrics, threshold calibration.
//!
//! Missing predictions (NA) are always excluded and counted, never imputed.
//! Metrics are kept at full precision; the `rounded` fields carry the
//! 3-decimal renderings used in reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const THRESHOLDS: std::ops::RangeInclusive<u8> = 3..=7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("threshold {0} outside 3..=7")]
    ThresholdOutOfRange(u8),
    #[error("no label for participant {0}")]
    MissingLabel(u32),
    #[error("no non-missing predictions to evaluate")]
    EmptyInput,
    #[error("ROC-AUC needs at least one positive and one negative, got {positives} and {negatives}")]
    DegenerateClasses { positives: usize, negatives: usize },
    #[error("need at least 2 scored pairs, got {0}")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Positive,
    Negative,
    Na,
}

/// Positive iff likelihood >= threshold; missing values stay missing.
pub fn binarize(
    likelihoods: &BTreeMap<u32, Option<u8>>,
    threshold: u8,
) -> Result<BTreeMap<u32, Outcome>, MetricsError> {
    if !THRESHOLDS.contains(&threshold) {
        return Err(MetricsError::ThresholdOutOfRange(threshold));
    }
    Ok(likelihoods
        .iter()
        .map(|(&id, l)| {
            let outcome = match l {
                None => Outcome::Na,
                Some(v) if *v >= threshold => Outcome::Positive,
                Some(_) => Outcome::Negative,
            };
            (id, outcome)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same matrix with the positive and negative classes swapped.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix::new(self.tn, self.fn_, self.fp, self.tp)
    }
}

/// Confusion matrix over non-missing predictions, plus the number excluded.
pub fn confusion(
    preds: &BTreeMap<u32, Outcome>,
    labels: &BTreeMap<u32, u8>,
) -> Result<(ConfusionMatrix, usize), MetricsError> {
    let mut cm = ConfusionMatrix::default();
    let mut excluded = 0;
    for (&id, outcome) in preds {
        if *outcome == Outcome::Na {
            excluded += 1;
            continue;
        }
        let truth = *labels.get(&id).ok_or(MetricsError::MissingLabel(id))? == 1;
        match (*outcome == Outcome::Positive, truth) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok((cm, excluded))
}

fn ratio(num: u64, den: u64, what: &str, flags: &mut Vec<String>) -> f64 {
    if den == 0 {
        flags.push(format!("{what} undefined (zero denominator), reported as 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedClassification {
    pub f1: String,
    pub macro_f1: String,
    pub accuracy: String,
    pub recall: String,
    pub precision: String,
    pub roc_auc: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    /// None when the scored set lacks one of the classes.
    pub roc_auc: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub n_excluded: usize,
    pub rounded: RoundedClassification,
    pub flags: Vec<String>,
}

/// Metrics from a confusion matrix; ROC-AUC from the raw `scores`.
pub fn classification_report(
    cm: ConfusionMatrix,
    scores: &BTreeMap<u32, f64>,
    labels: &BTreeMap<u32, u8>,
    n_excluded: usize,
) -> Result<ClassificationReport, MetricsError> {
    if cm.n() == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let mut flags = Vec::new();
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision", &mut flags);
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall", &mut flags);
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_, "positive-class F1", &mut flags);
    let f1_neg = ratio(2 * cm.tn, 2 * cm.tn + cm.fp + cm.fn_, "negative-class F1", &mut flags);
    let accuracy = (cm.tp + cm.tn) as f64 / cm.n() as f64;
    let macro_f1 = (f1 + f1_neg) / 2.0;
    let roc_auc = match roc_auc(scores, labels) {
        Ok(v) => Some(v),
        Err(e) => {
            flags.push(format!("roc_auc undefined: {e}"));
            None
        }
    };
    Ok(ClassificationReport {
        f1,
        macro_f1,
        accuracy,
        recall,
        precision,
        roc_auc,
        confusion: cm,
        n_excluded,
        rounded: RoundedClassification {
            f1: fmt3(f1),
            macro_f1: fmt3(macro_f1),
            accuracy: fmt3(accuracy),
            recall: fmt3(recall),
            precision: fmt3(precision),
            roc_auc: roc_auc.map(fmt3),
        },
        flags,
    })
}

fn split_scores(scores: &BTreeMap<u32, f64>, labels: &BTreeMap<u32, u8>) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&id, &s) in scores {
        match labels.get(&id) {
            Some(1) => pos.push(s),
            Some(_) => neg.push(s),
            None => return Err(MetricsError::MissingLabel(id)),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(MetricsError::DegenerateClasses {
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    Ok((pos, neg))
}

/// Probability that a random positive outscores a random negative, ties
/// counting half. Over {0,1} scores this equals balanced accuracy.
pub fn roc_auc(scores: &BTreeMap<u32, f64>, labels: &BTreeMap<u32, u8>) -> Result<f64, MetricsError> {
    let (pos, neg) = split_scores(scores, labels)?;
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Area under the ROC curve traced over the distinct score levels, by the
/// trapezoid rule.
pub fn roc_auc_trapezoid(scores: &BTreeMap<u32, f64>, labels: &BTreeMap<u32, u8>) -> Result<f64, MetricsError> {
    let (pos, neg) = split_scores(scores, labels)?;
    let mut levels: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut area = 0.0;
    let (mut prev_fpr, mut prev_tpr) = (0.0, 0.0);
    for level in levels {
        let tpr = pos.iter().filter(|&&s| s >= level).count() as f64 / np;
        let fpr = neg.iter().filter(|&&s| s >= level).count() as f64 / nn;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        (prev_fpr, prev_tpr) = (fpr, tpr);
    }
    Ok(area)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub accuracy: BTreeMap<u8, f64>,
    pub positives: BTreeMap<u8, usize>,
    pub n_excluded: usize,
    /// Highest accuracy; ties go to the lower threshold.
    pub best_threshold: u8,
}

pub fn threshold_sweep(
    likelihoods: &BTreeMap<u32, Option<u8>>,
    labels: &BTreeMap<u32, u8>,
    thresholds: &[u8],
) -> Result<ThresholdSweep, MetricsError> {
    let mut accuracy = BTreeMap::new();
    let mut positives = BTreeMap::new();
    let mut n_excluded = 0;
    for &t in thresholds {
        let preds = binarize(likelihoods, t)?;
        let (cm, excluded) = confusion(&preds, labels)?;
        if cm.n() == 0 {
            return Err(MetricsError::EmptyInput);
        }
        n_excluded = excluded;
        accuracy.insert(t, (cm.tp + cm.tn) as f64 / cm.n() as f64);
        positives.insert(t, (cm.tp + cm.fp) as usize);
    }
    let best_threshold = accuracy
        .iter()
        .fold(None::<(u8, f64)>, |best, (&t, &acc)| match best {
            Some((_, b)) if b >= acc => best,
            _ => Some((t, acc)),
        })
        .map(|(t, _)| t)
        .ok_or(MetricsError::EmptyInput)?;
    Ok(ThresholdSweep {
        accuracy,
        positives,
        n_excluded,
        best_threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub mae: f64,
    pub rmse: f64,
    /// None when every truth is equal.
    pub r_squared: Option<f64>,
    pub n: usize,
    pub n_excluded: usize,
    pub rounded: BTreeMap<String, String>,
    pub flags: Vec<String>,
}

fn scored_pairs(
    preds: &BTreeMap<u32, Option<u8>>,
    truths: &BTreeMap<u32, u8>,
) -> Result<(Vec<(f64, f64)>, usize), MetricsError> {
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for (&id, p) in preds {
        match p {
            None => excluded += 1,
            Some(p) => {
                let t = truths.get(&id).ok_or(MetricsError::MissingLabel(id))?;
                pairs.push((f64::from(*p), f64::from(*t)));
            }
        }
    }
    Ok((pairs, excluded))
}

pub fn regression_report(
    preds: &BTreeMap<u32, Option<u8>>,
    truths: &BTreeMap<u32, u8>,
) -> Result<RegressionReport, MetricsError> {
    let (pairs, n_excluded) = scored_pairs(preds, truths)?;
    let n = pairs.len();
    if n < 2 {
        return Err(MetricsError::InsufficientData(n));
    }
    let nf = n as f64;
    let mae = pairs.iter().map(|(p, t)| (p - t).abs()).sum::<f64>() / nf;
    let ss_res: f64 = pairs.iter().map(|(p, t)| (p - t).powi(2)).sum();
    let rmse = (ss_res / nf).sqrt();
    let mean_t = pairs.iter().map(|(_, t)| t).sum::<f64>() / nf;
    let ss_tot: f64 = pairs.iter().map(|(_, t)| (t - mean_t).powi(2)).sum();
    let mut flags = Vec::new();
    let r_squared = if ss_tot == 0.0 {
        flags.push("r_squared undefined: all truths equal".to_string());
        None
    } else {
        Some(1.0 - ss_res / ss_tot)
    };
    if r_squared.is_some_and(|r| r < 0.0) {
        flags.push("negative r_squared: worse than predicting the mean".to_string());
    }
    let mut rounded = BTreeMap::new();
    rounded.insert("mae".to_string(), fmt3(mae));
    rounded.insert("rmse".to_string(), fmt3(rmse));
    if let Some(r) = r_squared {
        rounded.insert("r_squared".to_string(), fmt3(r));
    }
    Ok(RegressionReport {
        mae,
        rmse,
        r_squared,
        n,
        n_excluded,
        rounded,
        flags,
    })
}

/// Frequency of |pred - truth| in bins of `bin_width`, covering 0 up to the
/// largest difference. Missing predictions are skipped.
pub fn abs_diff_histogram(
    preds: &BTreeMap<u32, Option<u8>>,
    truths: &BTreeMap<u32, u8>,
    bin_width: u32,
) -> Result<Vec<(u32, usize)>, MetricsError> {
    let bin_width = bin_width.max(1);
    let (pairs, _) = scored_pairs(preds, truths)?;
    let diffs: Vec<u32> = pairs.iter().map(|(p, t)| (p - t).abs() as u32).collect();
    let Some(&max) = diffs.iter().max() else {
        return Ok(Vec::new());
    };
    let mut bins: Vec<(u32, usize)> = (0..=max / bin_width).map(|b| (b * bin_width, 0)).collect();
    for d in diffs {
        bins[(d / bin_width) as usize].1 += 1;
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table_iv() -> BTreeMap<u32, Option<u8>> {
        [(300, 2), (306, 3), (308, 6), (309, 5), (311, 7)]
            .into_iter()
            .map(|(k, v)| (k, Some(v)))
            .collect()
    }

    fn table_iv_labels() -> BTreeMap<u32, u8> {
        [(300, 0), (306, 0), (308, 1), (309, 1), (311, 1)].into_iter().collect()
    }

    fn positives(m: &BTreeMap<u32, Outcome>) -> Vec<u32> {
        m.iter()
            .filter(|(_, o)| **o == Outcome::Positive)
            .map(|(k, _)| *k)
            .collect()
    }

    #[test]
    fn binarize_examples() {
        assert_eq!(positives(&binarize(&table_iv(), 5).unwrap()), vec![308, 309, 311]);
        assert_eq!(positives(&binarize(&table_iv(), 7).unwrap()), vec![311]);
        let all_na: BTreeMap<u32, Option<u8>> = [(1, None), (2, None)].into_iter().collect();
        assert!(binarize(&all_na, 4).unwrap().values().all(|o| *o == Outcome::Na));
        assert_eq!(binarize(&table_iv(), 2), Err(MetricsError::ThresholdOutOfRange(2)));
        assert_eq!(binarize(&table_iv(), 8), Err(MetricsError::ThresholdOutOfRange(8)));
    }

    #[test]
    fn confusion_examples() {
        let preds = binarize(&table_iv(), 5).unwrap();
        let (cm, excluded) = confusion(&preds, &table_iv_labels()).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(3, 0, 0, 2));
        assert_eq!(excluded, 0);

        let mut with_na: BTreeMap<u32, Outcome> = (0..8).map(|i| (i, Outcome::Negative)).collect();
        with_na.insert(8, Outcome::Na);
        with_na.insert(9, Outcome::Na);
        let labels: BTreeMap<u32, u8> = (0..8).map(|i| (i, 0)).collect();
        let (cm, excluded) = confusion(&with_na, &labels).unwrap();
        assert_eq!((cm.n(), excluded), (8, 2));

        let missing: BTreeMap<u32, Outcome> = [(99, Outcome::Positive)].into_iter().collect();
        assert_eq!(confusion(&missing, &labels), Err(MetricsError::MissingLabel(99)));
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let report =
            classification_report(ConfusionMatrix::new(0, 0, 0, 5), &BTreeMap::new(), &BTreeMap::new(), 0).unwrap();
        assert_eq!(report.precision, 0.0);
        assert_eq!(report.recall, 0.0);
        assert_eq!(report.f1, 0.0);
        assert_eq!(report.accuracy, 1.0);
        assert!(report.flags.iter().any(|f| f.starts_with("precision undefined")));
        assert!(report.roc_auc.is_none());
        assert_eq!(
            classification_report(ConfusionMatrix::default(), &BTreeMap::new(), &BTreeMap::new(), 3),
            Err(MetricsError::EmptyInput)
        );
    }

    #[test]
    fn roc_examples() {
        let labels: BTreeMap<u32, u8> = [(1, 1), (2, 1), (3, 0), (4, 0)].into_iter().collect();
        let s = |v: [f64; 4]| -> BTreeMap<u32, f64> { (1..=4).zip(v).collect() };
        assert_eq!(roc_auc(&s([7.0, 6.0, 2.0, 3.0]), &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&s([7.0, 4.0, 5.0, 3.0]), &labels).unwrap(), 0.75);
        let tie_labels: BTreeMap<u32, u8> = [(1, 1), (2, 0)].into_iter().collect();
        let tie: BTreeMap<u32, f64> = [(1, 5.0), (2, 5.0)].into_iter().collect();
        assert_eq!(roc_auc(&tie, &tie_labels).unwrap(), 0.5);
        let one_class: BTreeMap<u32, u8> = [(1, 1), (2, 1)].into_iter().collect();
        assert!(matches!(
            roc_auc(&tie, &one_class),
            Err(MetricsError::DegenerateClasses { .. })
        ));
    }

    #[test]
    fn binary_scores_auc_is_balanced_accuracy() {
        let cm = ConfusionMatrix::new(14, 14, 0, 19);
        let mut scores = BTreeMap::new();
        let mut labels = BTreeMap::new();
        let cells = [(cm.tp, 1.0, 1), (cm.fp, 1.0, 0), (cm.fn_, 0.0, 1), (cm.tn, 0.0, 0)];
        let mut id = 0;
        for (count, score, label) in cells {
            for _ in 0..count {
                scores.insert(id, score);
                labels.insert(id, label);
                id += 1;
            }
        }
        let balanced = (14.0 / 14.0 + 19.0 / 33.0) / 2.0;
        assert!((roc_auc(&scores, &labels).unwrap() - balanced).abs() < 1e-12);
    }

    #[test]
    fn sweep_examples() {
        let sweep = threshold_sweep(&table_iv(), &table_iv_labels(), &[3, 4, 5, 6, 7]).unwrap();
        let acc: Vec<f64> = sweep.accuracy.values().copied().collect();
        assert_eq!(acc, vec![0.8, 1.0, 1.0, 0.8, 0.6]);
        assert_eq!(sweep.best_threshold, 4);

        let inverted: BTreeMap<u32, u8> = table_iv_labels().into_iter().map(|(k, v)| (k, 1 - v)).collect();
        let inv = threshold_sweep(&table_iv(), &inverted, &[3, 4, 5, 6, 7]).unwrap();
        for t in 3..=7 {
            assert!((inv.accuracy[&t] + sweep.accuracy[&t] - 1.0).abs() < 1e-12);
        }

        let sevens: BTreeMap<u32, Option<u8>> = (0..4).map(|i| (i, Some(7))).collect();
        let ones: BTreeMap<u32, u8> = (0..4).map(|i| (i, 1)).collect();
        let s = threshold_sweep(&sevens, &ones, &[3, 4, 5, 6, 7]).unwrap();
        assert!(s.accuracy.values().all(|&a| a == 1.0));
        assert_eq!(s.best_threshold, 3);
    }

    #[test]
    fn regression_examples() {
        let truths: BTreeMap<u32, u8> = [(1, 10), (2, 0), (3, 20), (4, 14)].into_iter().collect();
        let same: BTreeMap<u32, Option<u8>> = truths.iter().map(|(&k, &v)| (k, Some(v))).collect();
        let r = regression_report(&same, &truths).unwrap();
        assert_eq!((r.mae, r.rmse, r.r_squared), (0.0, 0.0, Some(1.0)));

        let preds: BTreeMap<u32, Option<u8>> = [(1, Some(12)), (2, Some(2)), (3, Some(18)), (4, Some(14)), (5, None)]
            .into_iter()
            .collect();
        let r = regression_report(&preds, &truths).unwrap();
        assert!((r.mae - 1.5).abs() < 1e-12);
        assert!((r.rmse - 3f64.sqrt()).abs() < 1e-12);
        assert!((r.r_squared.unwrap() - (1.0 - 12.0 / 212.0)).abs() < 1e-12);
        assert_eq!((r.n, r.n_excluded), (4, 1));

        let flat: BTreeMap<u32, u8> = [(1, 6), (2, 6)].into_iter().collect();
        let p: BTreeMap<u32, Option<u8>> = [(1, Some(5)), (2, Some(7))].into_iter().collect();
        assert_eq!(regression_report(&p, &flat).unwrap().r_squared, None);

        let one: BTreeMap<u32, Option<u8>> = [(1, Some(5))].into_iter().collect();
        assert_eq!(regression_report(&one, &flat), Err(MetricsError::InsufficientData(1)));
    }

    #[test]
    fn mean_predictor_has_zero_r_squared() {
        let truths: BTreeMap<u32, u8> = [(1, 2), (2, 4), (3, 9)].into_iter().collect();
        let preds: BTreeMap<u32, Option<u8>> = truths.keys().map(|&k| (k, Some(5))).collect();
        assert!(regression_report(&preds, &truths).unwrap().r_squared.unwrap().abs() < 1e-12);
    }

    #[test]
    fn histogram_of_differences() {
        let truths: BTreeMap<u32, u8> = [(1, 5), (2, 10), (3, 0)].into_iter().collect();
        let preds: BTreeMap<u32, Option<u8>> = [(1, Some(13)), (2, Some(10)), (3, Some(1))].into_iter().collect();
        assert_eq!(
            abs_diff_histogram(&preds, &truths, 2).unwrap(),
            vec![(0, 2), (2, 0), (4, 0), (6, 0), (8, 1)]
        );
        assert!(abs_diff_histogram(&BTreeMap::new(), &truths, 2).unwrap().is_empty());
    }

    fn scored_set() -> impl Strategy<Value = (BTreeMap<u32, f64>, BTreeMap<u32, u8>)> {
        proptest::collection::vec((1u8..=7, 0u8..=1), 2..60).prop_map(|v| {
            let scores = v
                .iter()
                .enumerate()
                .map(|(i, (s, _))| (i as u32, f64::from(*s)))
                .collect();
            let labels = v.iter().enumerate().map(|(i, (_, l))| (i as u32, *l)).collect();
            (scores, labels)
        })
    }

    proptest! {
        #[test]
        fn auc_implementations_agree((scores, labels) in scored_set()) {
            match (roc_auc(&scores, &labels), roc_auc_trapezoid(&scores, &labels)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
                (Err(a), Err(b)) => prop_assert_eq!(a, b),
                other => prop_assert!(false, "disagree: {:?}", other),
            }
        }

        #[test]
        fn sweep_positive_count_is_monotone(
            v in proptest::collection::vec((proptest::option::of(1u8..=7), 0u8..=1), 1..40)
        ) {
            let likes: BTreeMap<u32, Option<u8>> = v.iter().enumerate().map(|(i, (s, _))| (i as u32, *s)).collect();
            let labels: BTreeMap<u32, u8> = v.iter().enumerate().map(|(i, (_, l))| (i as u32, *l)).collect();
            if let Ok(sweep) = threshold_sweep(&likes, &labels, &[3, 4, 5, 6, 7]) {
                let counts: Vec<usize> = sweep.positives.values().copied().collect();
                prop_assert!(counts.windows(2).all(|w| w[0] >= w[1]));
                let best = sweep.accuracy[&sweep.best_threshold];
                prop_assert!(sweep.accuracy.values().all(|&a| a <= best));
            }
        }

        #[test]
        fn complement_symmetry(tp in 0u64..50, fp in 0u64..50, fn_ in 0u64..50, tn in 0u64..50) {
            let cm = ConfusionMatrix::new(tp, fp, fn_, tn);
            prop_assume!(cm.n() > 0);
            let a = classification_report(cm, &BTreeMap::new(), &BTreeMap::new(), 0).unwrap();
            let b = classification_report(cm.swapped(), &BTreeMap::new(), &BTreeMap::new(), 0).unwrap();
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
            prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
            let neg_recall = if tn + fp == 0 { 0.0 } else { tn as f64 / (tn + fp) as f64 };
            prop_assert!((b.recall - neg_recall).abs() < 1e-12);
        }
    }
}
