//! Metrics, the Wilcoxon signed-rank test and the cross-validation driver.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::{label_mask_split, require_per_class, stratified_folds, Label, LabelVector, MaskedLabels, RawTable, SplitSpec};
use crate::error::{Error, EvalError};
use crate::pipeline::{fit_method, Method, PipelineConfig};
use crate::preprocess::{fit_pipeline, transform, PreprocessConfig};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn check_binary(y: &[u8]) -> Result<(), EvalError> {
    match y.iter().find(|&&v| v > 1) {
        Some(&v) => Err(EvalError::BadLabel(v)),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    check_binary(y_true)?;
    check_binary(y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall, F1 and false positive rate; any `0/0` is reported as 0.
pub fn prf_metrics(cm: &ConfusionMatrix) -> PrfMetrics {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrfMetrics {
        precision,
        recall,
        f1,
        fpr: ratio(cm.fp, cm.fp + cm.tn),
    }
}

/// 1-based average ranks of `values` ascending; ties share their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn check_scored(y_true: &[u8], scores: &[f64]) -> Result<(usize, usize), EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), scores.len()));
    }
    check_binary(y_true)?;
    let pos = y_true.iter().filter(|&&v| v == 1).count();
    Ok((pos, y_true.len() - pos))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc_roc(y_true: &[u8], scores: &[f64]) -> Result<f64, EvalError> {
    let (pos, neg) = check_scored(y_true, scores)?;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(y_true).filter(|(_, &y)| y == 1).map(|(r, _)| r).sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision: `sum (R_k - R_{k-1}) P_k` over descending score
/// thresholds, with tied scores entering as one block.
pub fn auc_pr(y_true: &[u8], scores: &[f64]) -> Result<f64, EvalError> {
    let (pos, _) = check_scored(y_true, scores)?;
    if pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let start_tp = tp;
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if tp > start_tp {
            ap += (tp - start_tp) as f64 / pos as f64 * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Precision,
    Recall,
    F1,
    AucRoc,
    AucPr,
    Fpr,
}

impl Metric {
    /// Report column order.
    pub const ALL: [Metric; 6] = [
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::AucRoc,
        Metric::AucPr,
        Metric::Fpr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
            Metric::AucRoc => "AUC-ROC",
            Metric::AucPr => "AUC-PR",
            Metric::Fpr => "FPR",
        }
    }
}

impl MetricsReport {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::AucRoc => self.auc_roc,
            Metric::AucPr => self.auc_pr,
            Metric::Fpr => self.fpr,
        }
    }
}

/// All metrics for one set of hard predictions and ranking scores.
pub fn evaluate(y_true: &[u8], y_pred: &[u8], scores: &[f64]) -> Result<MetricsReport, EvalError> {
    let cm = confusion(y_true, y_pred)?;
    let m = prf_metrics(&cm);
    Ok(MetricsReport {
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        fpr: m.fpr,
        auc_roc: auc_roc(y_true, scores)?,
        auc_pr: auc_pr(y_true, scores)?,
        confusion: cm,
    })
}

/// Pairs needed (after dropping zero differences) for a conclusive test.
pub const WILCOXON_MIN_PAIRS: usize = 5;
/// Largest pair count for which the exact null distribution is used.
pub const WILCOXON_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonTest {
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub n_nonzero: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WilcoxonResult {
    Inconclusive { n_nonzero: usize },
    Test(WilcoxonTest),
}

impl WilcoxonResult {
    pub fn p_value(&self) -> Option<f64> {
        match self {
            WilcoxonResult::Inconclusive { .. } => None,
            WilcoxonResult::Test(t) => Some(t.p_value),
        }
    }
}

/// Two-sided signed-rank test on paired samples.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// Up to 20 remaining pairs use the exact permutation distribution of the
/// (tied) ranks; beyond that the normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let m = diffs.len();
    if m < WILCOXON_MIN_PAIRS {
        return Ok(WilcoxonResult::Inconclusive { n_nonzero: m });
    }
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&mags);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total = (m * (m + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    let exact = m <= WILCOXON_EXACT_MAX;
    let p_value = if exact {
        // doubled ranks are integers even with ties
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let w2 = (2.0 * w).round() as usize;
        let tail: f64 = counts[..=w2].iter().sum();
        (2.0 * tail / 2f64.powi(m as i32)).min(1.0)
    } else {
        let mean = total / 2.0;
        let mut ties = 0.0;
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            ties += t * t * t - t;
            i = j + 1;
        }
        let mf = m as f64;
        let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - ties / 48.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(WilcoxonResult::Test(WilcoxonTest {
        w,
        w_plus,
        w_minus,
        p_value,
        n_nonzero: m,
        exact,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub n_folds: usize,
    pub labeled_fraction: f64,
    pub methods: Vec<Method>,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            labeled_fraction: 0.10,
            methods: Method::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_labeled: usize,
    /// One entry per configured method, in configuration order.
    pub metrics: Vec<(Method, MetricsReport)>,
    /// Self-training rounds of the two-phase model, when it ran.
    pub selftrain_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub mean: Vec<(Metric, f64)>,
    pub std: Vec<(Metric, f64)>,
}

impl MethodAggregate {
    pub fn mean_of(&self, m: Metric) -> f64 {
        self.mean.iter().find(|(k, _)| *k == m).map(|(_, v)| *v).unwrap_or(f64::NAN)
    }

    pub fn std_of(&self, m: Metric) -> f64 {
        self.std.iter().find(|(k, _)| *k == m).map(|(_, v)| *v).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: Method,
    pub metric: Metric,
    pub result: WilcoxonResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub labeled_fraction: f64,
    pub n_folds: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub folds: Vec<FoldResult>,
    pub aggregates: Vec<MethodAggregate>,
    /// Two-phase versus each baseline, per metric.
    pub comparisons: Vec<Comparison>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl CvReport {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    /// Per-fold values of one metric for one method.
    pub fn fold_values(&self, method: Method, metric: Metric) -> Vec<f64> {
        self.folds
            .iter()
            .filter_map(|f| f.metrics.iter().find(|(m, _)| *m == method).map(|(_, r)| r.get(metric)))
            .collect()
    }

    fn from_folds(cv: &CvConfig, folds: Vec<FoldResult>) -> Result<Self, EvalError> {
        let mut report = CvReport {
            labeled_fraction: cv.labeled_fraction,
            n_folds: cv.n_folds,
            seed: cv.seed,
            methods: cv.methods.clone(),
            folds,
            aggregates: Vec::new(),
            comparisons: Vec::new(),
        };
        for &method in &cv.methods {
            let mut mean = Vec::new();
            let mut std = Vec::new();
            for metric in Metric::ALL {
                let (m, s) = mean_std(&report.fold_values(method, metric));
                mean.push((metric, m));
                std.push((metric, s));
            }
            report.aggregates.push(MethodAggregate { method, mean, std });
        }
        if cv.methods.contains(&Method::TwoPhase) {
            for &baseline in cv.methods.iter().filter(|m| **m != Method::TwoPhase) {
                for metric in Metric::ALL {
                    let result = wilcoxon_signed_rank(
                        &report.fold_values(Method::TwoPhase, metric),
                        &report.fold_values(baseline, metric),
                    )?;
                    report.comparisons.push(Comparison {
                        baseline,
                        metric,
                        result,
                    });
                }
            }
        }
        Ok(report)
    }

    /// Fixed-width table: one row per method, `mean ± std` per metric.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "labeled fraction {:.2}, {} folds, seed {}",
            self.labeled_fraction, self.n_folds, self.seed
        );
        let _ = write!(s, "{:<16}", "Method");
        for m in Metric::ALL {
            let _ = write!(s, "{:>18}", m.name());
        }
        s.push('\n');
        for a in &self.aggregates {
            let _ = write!(s, "{:<16}", a.method.name());
            for m in Metric::ALL {
                let _ = write!(s, "{:>18}", format!("{:.4} ± {:.4}", a.mean_of(m), a.std_of(m)));
            }
            s.push('\n');
        }
        if !self.comparisons.is_empty() {
            s.push_str("\nWilcoxon signed-rank, two_phase vs baseline (two-sided p)\n");
            for c in &self.comparisons {
                let p = match c.result {
                    WilcoxonResult::Inconclusive { n_nonzero } => format!("inconclusive ({n_nonzero} nonzero pairs)"),
                    WilcoxonResult::Test(t) => format!("{:.4}{}", t.p_value, if t.exact { "" } else { " (normal)" }),
                };
                let _ = writeln!(s, "{:<16}{:<10}{}", c.baseline.name(), c.metric.name(), p);
            }
        }
        s
    }

    /// One row per fold and method with every metric and the confusion counts.
    pub fn write_folds_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fold,method,precision,recall,f1,auc_roc,auc_pr,fpr,tp,fp,fn,tn")?;
        for f in &self.folds {
            for (method, r) in &f.metrics {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    f.fold,
                    method.name(),
                    r.precision,
                    r.recall,
                    r.f1,
                    r.auc_roc,
                    r.auc_pr,
                    r.fpr,
                    r.confusion.tp,
                    r.confusion.fp,
                    r.confusion.fn_,
                    r.confusion.tn
                )?;
            }
        }
        Ok(())
    }
}

/// Stratified k-fold evaluation.
///
/// In every fold the training portion is masked down to `labeled_fraction`,
/// preprocessing is fit on the training rows only, each method is trained on
/// the masked labels, and all methods are scored on the held-out fold. Rows
/// whose label is already unknown never enter a test fold but join every
/// training portion as unlabeled data.
pub fn run_cv(
    table: &RawTable,
    labels: &LabelVector,
    preprocess: &PreprocessConfig,
    pipeline: &PipelineConfig,
    cv: &CvConfig,
) -> Result<CvReport, Error> {
    if cv.methods.is_empty() {
        return Err(EvalError::NoMethods.into());
    }
    if labels.len() != table.row_count() {
        return Err(EvalError::LengthMismatch(labels.len(), table.row_count()).into());
    }
    let observed = labels.observed_indices();
    let unknown = labels.unknown_indices();
    let observed_labels = labels.select(&observed);
    require_per_class(&observed_labels, cv.n_folds)?;
    let folds = stratified_folds(
        &observed_labels,
        &SplitSpec {
            labeled_fraction: cv.labeled_fraction,
            n_folds: cv.n_folds,
            seed: cv.seed,
        },
    )?;
    let mut results = Vec::with_capacity(folds.len());
    for (k, test_local) in folds.iter().enumerate() {
        let fold = run_fold(table, labels, preprocess, pipeline, cv, &observed, &unknown, &folds, k)
            .map_err(|e| EvalError::Fold {
                fold: k,
                source: Box::new(e),
            })?;
        debug_assert_eq!(fold.n_test, test_local.len());
        results.push(fold);
    }
    Ok(CvReport::from_folds(cv, results)?)
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    table: &RawTable,
    labels: &LabelVector,
    preprocess: &PreprocessConfig,
    pipeline: &PipelineConfig,
    cv: &CvConfig,
    observed: &[usize],
    unknown: &[usize],
    folds: &[Vec<usize>],
    k: usize,
) -> Result<FoldResult, Error> {
    let test: Vec<usize> = folds[k].iter().map(|&i| observed[i]).collect();
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(g, _)| g != k)
        .flat_map(|(_, f)| f.iter().map(|&i| observed[i]))
        .chain(unknown.iter().copied())
        .collect();
    train.sort_unstable();

    let fold_seed = derive_seed(cv.seed, Stream::FoldSeed, k as u64);
    let truth_train = labels.select(&train);
    let mask = label_mask_split(&truth_train, cv.labeled_fraction, fold_seed)?;
    let masked = MaskedLabels::new(&truth_train, &mask);

    let train_table = table.select_rows(&train);
    let model = fit_pipeline(&train_table, masked.observed(), preprocess)?;
    let x_train = transform(&model, &train_table)?;
    let x_test = transform(&model, &table.select_rows(&test))?;
    let y_test: Vec<u8> = test
        .iter()
        .map(|&i| labels.get(i).class().expect("test rows carry labels"))
        .collect();

    let mut metrics = Vec::with_capacity(cv.methods.len());
    let mut selftrain_iterations = None;
    for &method in &cv.methods {
        let fitted = fit_method(method, &x_train, masked.observed(), pipeline, fold_seed)?;
        if let Some(h) = fitted.selftrain_history() {
            selftrain_iterations = Some(h.iterations());
        }
        let (scores, pred) = fitted.score(&x_test)?;
        metrics.push((method, evaluate(&y_test, &pred, &scores)?));
    }
    Ok(FoldResult {
        fold: k,
        n_train: train.len(),
        n_test: test.len(),
        n_labeled: masked.observed().count(Label::Legit) + masked.observed().count(Label::Fraud),
        metrics,
        selftrain_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_and_prf() {
        let cm = confusion(&[1, 1, 0, 0, 1], &[1, 0, 0, 1, 1]).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                tp: 2,
                fp: 1,
                fn_: 1,
                tn: 1
            }
        );
        let m = prf_metrics(&cm);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.fpr, 0.5);
    }

    #[test]
    fn no_positive_predictions_give_zero_not_nan() {
        let m = prf_metrics(&confusion(&[1, 0, 0], &[0, 0, 0]).unwrap());
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn label_errors() {
        assert!(matches!(confusion(&[1], &[1, 0]), Err(EvalError::LengthMismatch(1, 2))));
        assert!(matches!(confusion(&[2], &[1]), Err(EvalError::BadLabel(2))));
        assert!(matches!(auc_roc(&[1, 1], &[0.1, 0.2]), Err(EvalError::SingleClass)));
        assert!(matches!(auc_pr(&[0, 0], &[0.1, 0.2]), Err(EvalError::NoPositives)));
    }

    #[test]
    fn auc_anchors() {
        assert_eq!(auc_roc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[1, 1, 0, 0], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 0.0);
        assert_eq!(auc_roc(&[0, 1, 0, 1], &[0.5; 4]).unwrap(), 0.5);
        assert_eq!(auc_roc(&[0, 1, 0, 1], &[0.1, 0.4, 0.5, 0.8]).unwrap(), 0.75);
        assert_eq!(auc_pr(&[0, 0, 0, 1], &[0.9, 0.8, 0.7, 0.1]).unwrap(), 0.25);
        assert_eq!(auc_pr(&[1, 0, 1], &[0.9, 0.8, 0.7]).unwrap(), 0.5 + 0.5 * 2.0 / 3.0);
        assert_eq!(auc_pr(&[1, 0, 1, 0], &[0.5; 4]).unwrap(), 0.5);
    }

    #[test]
    fn wilcoxon_small_samples_are_inconclusive() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(r, WilcoxonResult::Inconclusive { n_nonzero: 4 });
    }

    #[test]
    fn wilcoxon_all_positive_exact() {
        let a: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let b = vec![0.0; 10];
        let WilcoxonResult::Test(t) = wilcoxon_signed_rank(&a, &b).unwrap() else {
            panic!("expected a test")
        };
        assert!(t.exact);
        assert_eq!(t.w, 0.0);
        assert_eq!(t.w_plus, 55.0);
        assert!((t.p_value - 2.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_known_value() {
        // differences 1, -2, 3, 4, -5, 6, 7, 8: W- = 7, exact two-sided p = 19/128
        let a = [1.0, -2.0, 3.0, 4.0, -5.0, 6.0, 7.0, 8.0];
        let b = [0.0; 8];
        let WilcoxonResult::Test(t) = wilcoxon_signed_rank(&a, &b).unwrap() else {
            panic!("expected a test")
        };
        assert_eq!(t.w, 7.0);
        assert!((t.p_value - 0.1484375).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_normal_branch() {
        let a: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let b = vec![0.0; 30];
        let WilcoxonResult::Test(t) = wilcoxon_signed_rank(&a, &b).unwrap() else {
            panic!("expected a test")
        };
        assert!(!t.exact);
        assert!(t.p_value < 1e-5);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-12);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
    }
}
