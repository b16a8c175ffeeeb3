//! Evaluation, calibration and comparison reports over finished runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::{
    abs_diff_histogram, binarize, classification_report, confusion, regression_report, threshold_sweep,
    ClassificationReport, MetricsError, RegressionReport, ThresholdSweep,
};
use crate::orchestrator::{RunManifest, Task1Assessment, Task2Session};
use crate::parser::Verdict;
use crate::transcript::{CohortSummary, LabelRecord, SplitName};

pub const DEFAULT_THRESHOLD: u8 = 5;

fn binary_labels(labels: &[LabelRecord]) -> BTreeMap<u32, u8> {
    labels.iter().map(|l| (l.participant_id, l.phq8_binary)).collect()
}

fn total_labels(labels: &[LabelRecord]) -> BTreeMap<u32, u8> {
    labels.iter().map(|l| (l.participant_id, l.phq8_total)).collect()
}

fn likelihoods(assessments: &[Task1Assessment]) -> BTreeMap<u32, Option<u8>> {
    assessments.iter().map(|a| (a.participant_id, a.likelihood)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task1Evaluation {
    pub threshold: u8,
    pub n_participants: usize,
    pub n_excluded: usize,
    /// None when every prediction is missing.
    pub classification: Option<ClassificationReport>,
}

/// Binarize at `threshold` and score against the labels' PHQ-8 binary.
/// ROC-AUC uses the raw 1..7 ratings.
pub fn evaluate_task1(
    assessments: &[Task1Assessment],
    labels: &[LabelRecord],
    threshold: u8,
) -> Result<Task1Evaluation, MetricsError> {
    let likes = likelihoods(assessments);
    let truth = binary_labels(labels);
    let preds = binarize(&likes, threshold)?;
    let (cm, n_excluded) = confusion(&preds, &truth)?;
    let scores: BTreeMap<u32, f64> = likes
        .iter()
        .filter_map(|(&id, l)| l.map(|v| (id, f64::from(v))))
        .collect();
    let classification = match classification_report(cm, &scores, &truth, n_excluded) {
        Ok(r) => Some(r),
        Err(MetricsError::EmptyInput) => None,
        Err(e) => return Err(e),
    };
    Ok(Task1Evaluation {
        threshold,
        n_participants: assessments.len(),
        n_excluded,
        classification,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEvaluation {
    pub n_scored: usize,
    pub n_excluded: usize,
    /// None with fewer than two scored participants.
    pub regression: Option<RegressionReport>,
    /// `(bin_start, count)` of |estimate - truth|.
    pub abs_diff_histogram: Vec<(u32, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub agree: usize,
    pub disagree: usize,
    pub unclear: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task2Evaluation {
    pub n_participants: usize,
    /// Participants with at least one missing stage.
    pub n_excluded: usize,
    pub stages: BTreeMap<String, StageEvaluation>,
    pub verdicts: VerdictCounts,
}

/// Regression metrics of each stage's total against the labelled PHQ-8 total.
pub fn evaluate_task2(
    sessions: &[Task2Session],
    labels: &[LabelRecord],
    bin_width: u32,
) -> Result<Task2Evaluation, MetricsError> {
    let truths = total_labels(labels);
    type Pick = fn(&Task2Session) -> Option<u8>;
    let per_stage: [(&str, Pick); 3] = [
        ("stage1", |s| s.stage1.total),
        ("stage2", |s| s.stage2.total),
        ("stage3", |s| s.stage3.revised_total),
    ];
    let mut stages = BTreeMap::new();
    for (name, pick) in per_stage {
        let preds: BTreeMap<u32, Option<u8>> = sessions.iter().map(|s| (s.participant_id, pick(s))).collect();
        let n_excluded = preds.values().filter(|p| p.is_none()).count();
        let regression = match regression_report(&preds, &truths) {
            Ok(r) => Some(r),
            Err(MetricsError::InsufficientData(_)) => None,
            Err(e) => return Err(e),
        };
        stages.insert(
            name.to_string(),
            StageEvaluation {
                n_scored: preds.len() - n_excluded,
                n_excluded,
                regression,
                abs_diff_histogram: abs_diff_histogram(&preds, &truths, bin_width)?,
            },
        );
    }
    let mut verdicts = VerdictCounts::default();
    for s in sessions {
        match s.stage3.verdict {
            Verdict::Agree => verdicts.agree += 1,
            Verdict::Disagree => verdicts.disagree += 1,
            Verdict::Unclear => verdicts.unclear += 1,
        }
    }
    Ok(Task2Evaluation {
        n_participants: sessions.len(),
        n_excluded: sessions.iter().filter(|s| s.has_na()).count(),
        stages,
        verdicts,
    })
}

/// Everything `evaluate` writes for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_id: String,
    pub task: u8,
    pub config_name: String,
    pub model_id: String,
    pub task1: Option<Task1Evaluation>,
    pub task2: Option<Task2Evaluation>,
}

impl EvaluationReport {
    pub fn n_excluded(&self) -> usize {
        self.task1
            .as_ref()
            .map(|t| t.n_excluded)
            .or(self.task2.as_ref().map(|t| t.n_excluded))
            .unwrap_or(0)
    }

    pub fn new(manifest: &RunManifest) -> Self {
        EvaluationReport {
            run_id: manifest.run_id.clone(),
            task: manifest.task,
            config_name: manifest.config_name.clone(),
            model_id: manifest.model_id.clone(),
            task1: None,
            task2: None,
        }
    }
}

/// Histogram rows `stage,bin_start,count` for every stage.
pub fn histogram_csv(eval: &Task2Evaluation) -> String {
    let mut out = String::from("stage,bin_start,count\n");
    for (stage, s) in &eval.stages {
        for (start, count) in &s.abs_diff_histogram {
            out.push_str(&format!("{stage},{start},{count}\n"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub run_id: String,
    pub n_participants: usize,
    pub n_excluded: usize,
    /// None when every rating is missing.
    pub sweep: Option<ThresholdSweep>,
}

pub fn calibrate(
    run_id: &str,
    assessments: &[Task1Assessment],
    labels: &[LabelRecord],
    thresholds: &[u8],
) -> Result<CalibrationReport, MetricsError> {
    let likes = likelihoods(assessments);
    let n_excluded = likes.values().filter(|l| l.is_none()).count();
    let sweep = match threshold_sweep(&likes, &binary_labels(labels), thresholds) {
        Ok(s) => Some(s),
        Err(MetricsError::EmptyInput) => None,
        Err(e) => return Err(e),
    };
    Ok(CalibrationReport {
        run_id: run_id.to_string(),
        n_participants: assessments.len(),
        n_excluded,
        sweep,
    })
}

pub fn calibration_table(report: &CalibrationReport) -> String {
    let mut out = String::from("threshold  accuracy  positives\n");
    match &report.sweep {
        None => out.push_str("(no scored participants)\n"),
        Some(sweep) => {
            for (t, acc) in &sweep.accuracy {
                out.push_str(&format!("{t:>9}  {acc:>8.3}  {:>9}\n", sweep.positives[t]));
            }
            out.push_str(&format!("best threshold: {}\n", sweep.best_threshold));
        }
    }
    out
}

/// One row of a multi-run comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub run_id: String,
    pub config_name: String,
    pub model_id: String,
    pub threshold: u8,
    pub n: usize,
    pub n_excluded: usize,
    pub classification: Option<ClassificationReport>,
}

impl CompareRow {
    pub fn new(manifest: &RunManifest, eval: &Task1Evaluation) -> Self {
        CompareRow {
            run_id: manifest.run_id.clone(),
            config_name: manifest.config_name.clone(),
            model_id: manifest.model_id.clone(),
            threshold: eval.threshold,
            n: eval.n_participants - eval.n_excluded,
            n_excluded: eval.n_excluded,
            classification: eval.classification.clone(),
        }
    }
}

/// CSV with one row per run, highest F1 first. Rows without metrics sort
/// last; ties keep input order.
pub fn compare_csv(rows: &[CompareRow]) -> Result<String, csv::Error> {
    let mut sorted: Vec<&CompareRow> = rows.iter().collect();
    let key = |r: &CompareRow| r.classification.as_ref().map_or(f64::NEG_INFINITY, |c| c.f1);
    sorted.sort_by(|a, b| key(b).total_cmp(&key(a)));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "run_id",
        "config_name",
        "model_id",
        "threshold",
        "f1",
        "macro_f1",
        "accuracy",
        "recall",
        "precision",
        "roc_auc",
        "n",
        "n_excluded",
    ])?;
    for r in sorted {
        let metrics: [String; 6] = match &r.classification {
            Some(c) => [
                c.rounded.f1.clone(),
                c.rounded.macro_f1.clone(),
                c.rounded.accuracy.clone(),
                c.rounded.recall.clone(),
                c.rounded.precision.clone(),
                c.rounded.roc_auc.clone().unwrap_or_default(),
            ],
            None => Default::default(),
        };
        let mut record = vec![
            r.run_id.clone(),
            r.config_name.clone(),
            r.model_id.clone(),
            r.threshold.to_string(),
        ];
        record.extend(metrics);
        record.push(r.n.to_string());
        record.push(r.n_excluded.to_string());
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Cohort counts laid out as rows (participants, >= 10, < 10, ratio) and
/// columns (overall, then each split).
pub fn cohort_table(overall: &CohortSummary, splits: &[(SplitName, CohortSummary)]) -> String {
    let mut columns: Vec<(String, &CohortSummary)> = vec![("Overall".to_string(), overall)];
    columns.extend(splits.iter().map(|(n, s)| (n.to_string(), s)));
    let ratio = |s: &CohortSummary| s.ratio.map_or("n/a".to_string(), |r| format!("{r:.2}"));
    type Cell<'a> = Box<dyn Fn(&CohortSummary) -> String + 'a>;
    let rows: [(&str, Cell); 4] = [
        ("Participants", Box::new(|s| s.n_total.to_string())),
        ("PHQ-8 >= 10 (A)", Box::new(|s| s.n_positive.to_string())),
        ("PHQ-8 < 10 (B)", Box::new(|s| s.n_negative.to_string())),
        ("Ratio A/B", Box::new(ratio)),
    ];
    let mut out = format!("{:<16}", "");
    for (name, _) in &columns {
        out.push_str(&format!(" {name:>8}"));
    }
    out.push('\n');
    for (label, cell) in rows.iter() {
        out.push_str(&format!("{label:<16}"));
        for (_, s) in &columns {
            out.push_str(&format!(" {:>8}", cell(s)));
        }
        out.push('\n');
    }
    out
}
