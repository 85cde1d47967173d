//! Self-training refinement with class-balanced pseudo-labeling.
//!
//! Each round predicts the remaining candidates, scores their confidence as
//! `|f(x)| / max |f|` over the round's candidates, and accepts those whose
//! confidence clears a per-class threshold that rises as the class
//! accumulates pseudo-labels. Accepted rows join the labeled pool and the SVM
//! is retrained with class weights recomputed over the pool.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::stratified_holdout;
use crate::error::SelfTrainError;
use crate::eval::{confusion, prf_metrics};
use crate::matrix::FeatureMatrix;
use crate::svm::{class_weights, label_of, train_svm, KernelParams, SolverOptions, SvmModel};

/// Upper clamp for class thresholds; a bar above 1 would freeze a class.
pub const THRESHOLD_CAP: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfTrainConfig {
    pub theta_base: f64,
    pub beta: f64,
    /// Target pseudo-label count per class; `None` means half the labeled set.
    pub n_target: Option<usize>,
    pub max_iterations: usize,
    pub delta_f1_tol: f64,
    pub min_batch: usize,
    pub validation_fraction: f64,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        Self {
            theta_base: 0.85,
            beta: 0.3,
            n_target: None,
            max_iterations: 10,
            delta_f1_tol: 0.001,
            min_batch: 50,
            validation_fraction: 0.2,
        }
    }
}

impl SelfTrainConfig {
    pub fn validate(&self) -> Result<(), SelfTrainError> {
        if !(self.theta_base > 0.0 && self.theta_base < 1.0) {
            return Err(SelfTrainError::BadConfig(format!("theta_base {} outside (0, 1)", self.theta_base)));
        }
        if !(self.beta >= 0.0) {
            return Err(SelfTrainError::BadConfig(format!("beta {} < 0", self.beta)));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(SelfTrainError::BadConfig(format!(
                "validation_fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if self.n_target == Some(0) {
            return Err(SelfTrainError::BadConfig("n_target must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_n_target(&self, n_labeled: usize) -> usize {
        self.n_target.unwrap_or(n_labeled / 2).max(1)
    }
}

/// `|f_i| / max_j |f_j|`; all zeros when every value is zero.
pub fn confidence(decision_values: &[f64]) -> Result<Vec<f64>, SelfTrainError> {
    if decision_values.is_empty() {
        return Err(SelfTrainError::EmptyInput);
    }
    let max = decision_values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(vec![0.0; decision_values.len()]);
    }
    Ok(decision_values.iter().map(|v| v.abs() / max).collect())
}

/// `clamp(theta_base + beta * ln(max(n_c, 1) / n_target), 0, 0.999)`.
pub fn class_threshold(n_c: usize, n_target: usize, theta_base: f64, beta: f64) -> f64 {
    let ratio = n_c.max(1) as f64 / n_target.max(1) as f64;
    (theta_base + beta * ratio.ln()).clamp(0.0, THRESHOLD_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    /// Row index into the candidate matrix.
    pub index: usize,
    pub label: u8,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PseudoLabelBatch {
    pub entries: Vec<PseudoLabel>,
    pub theta_fraud: f64,
    pub theta_legit: f64,
}

impl PseudoLabelBatch {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `[legit, fraud]` counts.
    pub fn counts(&self) -> [usize; 2] {
        let fraud = self.entries.iter().filter(|e| e.label == 1).count();
        [self.entries.len() - fraud, fraud]
    }
}

/// Entries whose confidence reaches the threshold of their predicted class.
pub fn select_by_confidence(
    indices: &[usize],
    predicted: &[u8],
    confidences: &[f64],
    theta_legit: f64,
    theta_fraud: f64,
) -> PseudoLabelBatch {
    let entries = indices
        .iter()
        .zip(predicted)
        .zip(confidences)
        .filter(|((_, &y), &c)| c >= if y == 1 { theta_fraud } else { theta_legit })
        .map(|((&index, &label), &confidence)| PseudoLabel {
            index,
            label,
            confidence,
        })
        .collect();
    PseudoLabelBatch {
        entries,
        theta_fraud,
        theta_legit,
    }
}

/// One selection round over `candidates` (rows listed in `indices`).
///
/// `counts` holds the pseudo-labels accumulated so far as `[legit, fraud]`.
pub fn select_pseudo_labels(
    candidates: &FeatureMatrix,
    indices: &[usize],
    model: &SvmModel,
    counts: [usize; 2],
    n_target: usize,
    cfg: &SelfTrainConfig,
) -> Result<PseudoLabelBatch, SelfTrainError> {
    let theta_legit = class_threshold(counts[0], n_target, cfg.theta_base, cfg.beta);
    let theta_fraud = class_threshold(counts[1], n_target, cfg.theta_base, cfg.beta);
    if indices.is_empty() {
        return Ok(PseudoLabelBatch {
            entries: Vec::new(),
            theta_fraud,
            theta_legit,
        });
    }
    let rows = candidates.select_rows(indices);
    let decisions = model.decision_values(&rows)?;
    let predicted: Vec<u8> = decisions.iter().map(|&d| label_of(d)).collect();
    let conf = confidence(&decisions)?;
    Ok(select_by_confidence(indices, &predicted, &conf, theta_legit, theta_fraud))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    /// `f1 - previous f1`; absent for the initial model.
    pub delta_f1: Option<f64>,
    pub added_legit: usize,
    pub added_fraud: usize,
    pub theta_fraud: Option<f64>,
    pub theta_legit: Option<f64>,
    pub labeled_size: usize,
    /// The batch accepted to produce this iteration's model.
    pub accepted: Vec<PseudoLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    NoCandidates,
    SmallBatch,
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelfTrainHistory {
    pub records: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
    /// Size of the rejected final batch when the run stopped on `min_batch`.
    pub discarded_batch: usize,
}

impl SelfTrainHistory {
    /// Self-training rounds performed (the initial model is not a round).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "iteration,f1,delta_f1,precision,recall,added_legit,added_fraud,theta_fraud,theta_legit,labeled_size"
        )?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.iteration,
                r.f1,
                opt(r.delta_f1),
                r.precision,
                r.recall,
                r.added_legit,
                r.added_fraud,
                opt(r.theta_fraud),
                opt(r.theta_legit),
                r.labeled_size
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SelfTrainOutcome {
    /// Model from the iteration with the best validation F1 (earliest on ties).
    pub model: SvmModel,
    pub best_iteration: usize,
    pub history: SelfTrainHistory,
    /// Rows of the labeled input used for training and for validation.
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
}

fn validation_scores(model: &SvmModel, x: &FeatureMatrix, y: &[u8]) -> Result<(f64, f64, f64), SelfTrainError> {
    let pred: Vec<u8> = model.decision_values(x)?.into_iter().map(label_of).collect();
    let cm = confusion(y, &pred).expect("validation labels are aligned");
    let m = prf_metrics(&cm);
    Ok((m.f1, m.precision, m.recall))
}

/// Runs the pseudo-labeling loop.
///
/// `x_labeled`/`y_labeled` is the labeled set; a stratified
/// `validation_fraction` of it is held out to monitor F1. `params` supplies
/// `C` and `gamma`; class weights are recomputed from the pool before each
/// fit.
pub fn self_train(
    x_labeled: &FeatureMatrix,
    y_labeled: &[u8],
    candidates: &FeatureMatrix,
    params: &KernelParams,
    cfg: &SelfTrainConfig,
    solver: &SolverOptions,
    seed: u64,
) -> Result<SelfTrainOutcome, SelfTrainError> {
    cfg.validate()?;
    let has = |c| y_labeled.contains(&c);
    if !has(0) || !has(1) {
        return Err(SelfTrainError::SingleClass);
    }
    let (train_rows, validation_rows) = stratified_holdout(y_labeled, cfg.validation_fraction, seed)?;
    let x_val = x_labeled.select_rows(&validation_rows);
    let y_val: Vec<u8> = validation_rows.iter().map(|&i| y_labeled[i]).collect();

    let mut pool_x = x_labeled.select_rows(&train_rows);
    let mut pool_y: Vec<u8> = train_rows.iter().map(|&i| y_labeled[i]).collect();
    let n_target = cfg.resolved_n_target(y_labeled.len());

    let fit = |x: &FeatureMatrix, y: &[u8]| {
        train_svm(x, y, &params.with_weights(class_weights(y)), solver).map(|o| o.model)
    };

    let mut model = fit(&pool_x, &pool_y)?;
    let (f1, precision, recall) = validation_scores(&model, &x_val, &y_val)?;
    let mut history = SelfTrainHistory::default();
    history.records.push(IterationRecord {
        iteration: 0,
        f1,
        precision,
        recall,
        delta_f1: None,
        added_legit: 0,
        added_fraud: 0,
        theta_fraud: None,
        theta_legit: None,
        labeled_size: pool_y.len(),
        accepted: Vec::new(),
    });
    let mut best = (f1, 0usize, model.clone());

    let mut remaining: Vec<usize> = (0..candidates.nrows()).collect();
    let mut counts = [0usize; 2];
    let mut t = 0;
    let stop = loop {
        if remaining.is_empty() {
            break StopReason::NoCandidates;
        }
        if t >= cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        let batch = select_pseudo_labels(candidates, &remaining, &model, counts, n_target, cfg)?;
        if batch.is_empty() || batch.len() < cfg.min_batch {
            history.discarded_batch = batch.len();
            break StopReason::SmallBatch;
        }
        let accepted: Vec<usize> = batch.entries.iter().map(|e| e.index).collect();
        pool_x.extend_rows(&candidates.select_rows(&accepted));
        pool_y.extend(batch.entries.iter().map(|e| e.label));
        let added = batch.counts();
        counts[0] += added[0];
        counts[1] += added[1];
        remaining.retain(|i| accepted.binary_search(i).is_err());

        model = fit(&pool_x, &pool_y)?;
        t += 1;
        let (f1, precision, recall) = validation_scores(&model, &x_val, &y_val)?;
        let prev = history.records.last().expect("initial record").f1;
        let delta = f1 - prev;
        history.records.push(IterationRecord {
            iteration: t,
            f1,
            precision,
            recall,
            delta_f1: Some(delta),
            added_legit: added[0],
            added_fraud: added[1],
            theta_fraud: Some(batch.theta_fraud),
            theta_legit: Some(batch.theta_legit),
            labeled_size: pool_y.len(),
            accepted: batch.entries,
        });
        if f1 > best.0 {
            best = (f1, t, model.clone());
        }
        if delta < cfg.delta_f1_tol {
            break StopReason::Converged;
        }
    };
    history.stop = Some(stop);
    Ok(SelfTrainOutcome {
        model: best.2,
        best_iteration: best.1,
        history,
        train_rows,
        validation_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_anchors() {
        assert_eq!(confidence(&[2.0, -1.0, 0.5]).unwrap(), vec![1.0, 0.5, 0.25]);
        assert_eq!(confidence(&[-3.0, 3.0, 3.0]).unwrap(), vec![1.0; 3]);
        assert_eq!(confidence(&[0.0, 0.0]).unwrap(), vec![0.0; 2]);
        assert!(confidence(&[]).is_err());
    }

    #[test]
    fn threshold_anchors() {
        assert_eq!(class_threshold(100, 100, 0.85, 0.3), 0.85);
        assert_eq!(class_threshold(200, 100, 0.85, 0.3), THRESHOLD_CAP);
        let half = class_threshold(50, 100, 0.85, 0.3);
        assert!((half - (0.85 - 0.3 * 2f64.ln())).abs() < 1e-12);
        assert!((half - 0.6421).abs() < 1e-4);
        assert_eq!(class_threshold(0, 1000, 0.85, 0.3), 0.0);
    }

    #[test]
    fn selection_respects_class_threshold() {
        let b = select_by_confidence(&[0, 1], &[0, 0], &[0.9, 0.8], 0.85, 0.85);
        assert_eq!(b.entries.len(), 1);
        assert_eq!(b.entries[0].index, 0);
    }

    #[test]
    fn capped_fraud_threshold_keeps_only_the_max() {
        let conf = confidence(&[4.0, 3.9, 2.0, -1.0]).unwrap();
        let b = select_by_confidence(&[0, 1, 2, 3], &[1, 1, 1, 0], &conf, 0.0, THRESHOLD_CAP);
        let frauds: Vec<_> = b.entries.iter().filter(|e| e.label == 1).collect();
        assert_eq!(frauds.len(), 1);
        assert_eq!(frauds[0].confidence, 1.0);
    }

    #[test]
    fn no_fraud_predictions_yield_legit_only() {
        let b = select_by_confidence(&[0, 1, 2], &[0, 0, 0], &[1.0, 0.9, 0.5], 0.5, 0.5);
        assert!(b.entries.iter().all(|e| e.label == 0));
        assert_eq!(b.len(), 3);
    }

    fn blobs(n: usize, offset: f64, seed: u64) -> (FeatureMatrix, Vec<u8>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let fraud = i % 10 == 0;
            let c = if fraud { offset } else { 0.0 };
            rows.push(vec![c + rng.random_range(-1.0..1.0), c + rng.random_range(-1.0..1.0)]);
            y.push(fraud as u8);
        }
        (FeatureMatrix::from_rows(&rows), y)
    }

    #[test]
    fn empty_candidates_return_initial_model() {
        let (x, y) = blobs(60, 3.0, 1);
        let out = self_train(
            &x,
            &y,
            &FeatureMatrix::zeros(0, 2),
            &KernelParams::new(1.0, 0.5),
            &SelfTrainConfig::default(),
            &SolverOptions::default(),
            0,
        )
        .unwrap();
        assert_eq!(out.history.records.len(), 1);
        assert_eq!(out.history.iterations(), 0);
        assert_eq!(out.best_iteration, 0);
        assert_eq!(out.history.stop, Some(StopReason::NoCandidates));
    }

    #[test]
    fn loop_bookkeeping() {
        let (x, y) = blobs(80, 3.0, 2);
        let (cand, _) = blobs(400, 3.0, 3);
        let cfg = SelfTrainConfig {
            min_batch: 1,
            delta_f1_tol: -1.0,
            ..Default::default()
        };
        let out = self_train(&x, &y, &cand, &KernelParams::new(1.0, 0.5), &cfg, &SolverOptions::default(), 4).unwrap();
        let recs = &out.history.records;
        assert!(out.history.iterations() <= 10);
        let mut seen = std::collections::HashSet::new();
        for w in recs.windows(2) {
            assert!(w[1].labeled_size > w[0].labeled_size);
            assert_eq!(w[1].delta_f1, Some(w[1].f1 - w[0].f1));
        }
        for r in &recs[1..] {
            for e in &r.accepted {
                assert!(seen.insert(e.index), "row pseudo-labeled twice");
                let theta = if e.label == 1 { r.theta_fraud } else { r.theta_legit };
                assert!(e.confidence >= theta.unwrap());
            }
        }
        let best = recs.iter().map(|r| r.f1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(recs[out.best_iteration].f1, best);
        assert!(best >= recs[0].f1);
    }

    #[test]
    fn history_csv_layout() {
        let h = SelfTrainHistory {
            records: vec![IterationRecord {
                iteration: 0,
                f1: 0.5,
                precision: 0.5,
                recall: 0.5,
                delta_f1: None,
                added_legit: 0,
                added_fraud: 0,
                theta_fraud: None,
                theta_legit: None,
                labeled_size: 10,
                accepted: vec![],
            }],
            stop: None,
            discarded_batch: 0,
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "0,0.5,,0.5,0.5,0,0,,,10");
    }
}
