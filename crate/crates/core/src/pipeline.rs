//! The three detectors compared in evaluation: isolation forest alone, a
//! supervised SVM on the labeled rows, and the two-phase model (isolation
//! forest candidates refined by self-training).

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabelVector};
use crate::error::{Error, SelfTrainError, SvmError};
use crate::iforest::{adaptive_threshold, build_forest, candidate_set, ForestParams, IsolationForestModel, ThresholdConfig};
use crate::matrix::FeatureMatrix;
use crate::rng::{derive_seed, Stream};
use crate::selftrain::{self_train, SelfTrainConfig, SelfTrainHistory};
use crate::svm::{class_weights, grid_search, label_of, train_svm, GridScore, KernelParams, ParamGrid, SolverOptions, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    IforestOnly,
    SvmSupervised,
    TwoPhase,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::IforestOnly, Method::SvmSupervised, Method::TwoPhase];

    pub fn name(self) -> &'static str {
        match self {
            Method::IforestOnly => "iforest_only",
            Method::SvmSupervised => "svm_supervised",
            Method::TwoPhase => "two_phase",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Pick `(C, gamma)` by cross-validated F1; otherwise use `c` and `gamma`.
    pub grid_search: bool,
    pub grid: ParamGrid,
    pub grid_folds: usize,
    pub c: f64,
    pub gamma: f64,
    pub solver: SolverOptions,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            grid_search: true,
            grid: ParamGrid::default(),
            grid_folds: 5,
            c: 1.0,
            gamma: 0.1,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub forest: ForestParams,
    pub threshold: ThresholdConfig,
    pub svm: SvmConfig,
    pub selftrain: SelfTrainConfig,
}

/// Labeled rows as `(indices, classes)`.
fn labeled_rows(labels: &LabelVector) -> (Vec<usize>, Vec<u8>) {
    let idx = labels.observed_indices();
    let y = idx.iter().map(|&i| labels.get(i).class().expect("observed")).collect();
    (idx, y)
}

/// `(C, gamma)` for the labeled set, with class weights from `y`.
///
/// Grid search needs every class in every fold, so the fold count shrinks to
/// the minority size; with fewer than two minority rows the fixed pair is used.
pub fn choose_params(
    x: &FeatureMatrix,
    y: &[u8],
    cfg: &SvmConfig,
    seed: u64,
) -> Result<(KernelParams, Option<Vec<GridScore>>), SvmError> {
    let fixed = KernelParams::new(cfg.c, cfg.gamma).with_weights(class_weights(y));
    if !cfg.grid_search {
        return Ok((fixed, None));
    }
    let minority = y.iter().filter(|&&v| v == 1).count().min(y.iter().filter(|&&v| v == 0).count());
    let k = cfg.grid_folds.min(minority);
    if k < 2 {
        return Ok((fixed, None));
    }
    let g = grid_search(x, y, &cfg.grid, k, derive_seed(seed, Stream::GridSearch, 0), &cfg.solver)?;
    Ok((g.best, Some(g.scores)))
}

/// Forest on every training row plus the adaptive threshold over the
/// unlabeled rows (all rows when none are unlabeled).
fn fit_forest(
    x: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(IsolationForestModel, Vec<usize>, Vec<f64>), Error> {
    let forest = build_forest(x, cfg.forest.n_trees, cfg.forest.subsample_size, seed)?;
    let mut unlabeled = labels.unknown_indices();
    if unlabeled.is_empty() {
        unlabeled = (0..x.nrows()).collect();
    }
    let scores = forest.score_all(&x.select_rows(&unlabeled))?;
    Ok((forest, unlabeled, scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IforestOnlyModel {
    pub forest: IsolationForestModel,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPhaseModel {
    pub forest: IsolationForestModel,
    pub threshold: ThresholdConfig,
    pub tau: f64,
    pub svm: SvmModel,
}

impl TwoPhaseModel {
    /// Confidence of a decision value relative to the largest training
    /// magnitude, capped at 1.
    pub fn confidence(&self, decision: f64) -> f64 {
        let m = self.svm.max_abs_decision_on_train();
        if m > 0.0 {
            (decision.abs() / m).min(1.0)
        } else {
            0.0
        }
    }
}

/// Diagnostics from fitting the two-phase model.
#[derive(Debug, Clone)]
pub struct TwoPhaseFit {
    pub model: TwoPhaseModel,
    /// Training rows the forest flagged as candidates, ascending.
    pub candidates: Vec<usize>,
    pub above_threshold: usize,
    /// Anomaly scores of the unlabeled rows, aligned with `unlabeled`.
    pub unlabeled: Vec<usize>,
    pub unlabeled_scores: Vec<f64>,
    pub grid: Option<Vec<GridScore>>,
    pub history: SelfTrainHistory,
    pub best_iteration: usize,
}

pub fn fit_two_phase(
    x: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<TwoPhaseFit, Error> {
    let (forest, unlabeled, scores) = fit_forest(x, labels, cfg, seed)?;
    let cand = candidate_set(&scores, &cfg.threshold)?;
    let candidates: Vec<usize> = cand.indices.iter().map(|&i| unlabeled[i]).collect();

    let (idx, y) = labeled_rows(labels);
    if idx.is_empty() {
        return Err(SelfTrainError::EmptyInput.into());
    }
    let x_l = x.select_rows(&idx);
    let (params, grid) = choose_params(&x_l, &y, &cfg.svm, seed)?;
    let out = self_train(
        &x_l,
        &y,
        &x.select_rows(&candidates),
        &params,
        &cfg.selftrain,
        &cfg.svm.solver,
        derive_seed(seed, Stream::Holdout, 0),
    )?;
    Ok(TwoPhaseFit {
        model: TwoPhaseModel {
            forest,
            threshold: cfg.threshold,
            tau: cand.threshold,
            svm: out.model,
        },
        candidates,
        above_threshold: cand.above_threshold,
        unlabeled,
        unlabeled_scores: scores,
        grid,
        history: out.history,
        best_iteration: out.best_iteration,
    })
}

pub fn fit_iforest_only(
    x: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<IforestOnlyModel, Error> {
    let (forest, _, scores) = fit_forest(x, labels, cfg, seed)?;
    let tau = adaptive_threshold(&scores, cfg.threshold.alpha)?;
    Ok(IforestOnlyModel { forest, tau })
}

pub fn fit_svm_supervised(
    x: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<SvmModel, Error> {
    let (idx, y) = labeled_rows(labels);
    if idx.is_empty() {
        return Err(SvmError::Empty.into());
    }
    let x_l = x.select_rows(&idx);
    let (params, _) = choose_params(&x_l, &y, &cfg.svm, seed)?;
    Ok(train_svm(&x_l, &y, &params, &cfg.svm.solver)?.model)
}

#[derive(Debug, Clone)]
pub enum FittedMethod {
    IforestOnly(IforestOnlyModel),
    SvmSupervised(SvmModel),
    TwoPhase(Box<TwoPhaseFit>),
}

impl FittedMethod {
    /// Ranking scores and hard predictions for `x`.
    ///
    /// The forest baseline ranks by anomaly score and flags `s >= tau`; the
    /// SVM methods rank by decision value and flag its sign.
    pub fn score(&self, x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<u8>), Error> {
        match self {
            FittedMethod::IforestOnly(m) => {
                let s = m.forest.score_all(x)?;
                let pred = s.iter().map(|&v| u8::from(v >= m.tau)).collect();
                Ok((s, pred))
            }
            FittedMethod::SvmSupervised(m) => svm_scores(m, x),
            FittedMethod::TwoPhase(f) => svm_scores(&f.model.svm, x),
        }
    }

    pub fn selftrain_history(&self) -> Option<&SelfTrainHistory> {
        match self {
            FittedMethod::TwoPhase(f) => Some(&f.history),
            _ => None,
        }
    }
}

fn svm_scores(m: &SvmModel, x: &FeatureMatrix) -> Result<(Vec<f64>, Vec<u8>), Error> {
    let d = m.decision_values(x)?;
    let pred = d.iter().map(|&v| label_of(v)).collect();
    Ok((d, pred))
}

/// Fits `method` on `x` using the observed entries of `labels`; unknown
/// labels mark the unlabeled pool.
pub fn fit_method(
    method: Method,
    x: &FeatureMatrix,
    labels: &LabelVector,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<FittedMethod, Error> {
    if labels.len() != x.nrows() {
        return Err(SvmError::LengthMismatch {
            rows: x.nrows(),
            labels: labels.len(),
        }
        .into());
    }
    debug_assert!(labels.values().iter().any(|l| *l != Label::Unknown));
    Ok(match method {
        Method::IforestOnly => FittedMethod::IforestOnly(fit_iforest_only(x, labels, cfg, seed)?),
        Method::SvmSupervised => FittedMethod::SvmSupervised(fit_svm_supervised(x, labels, cfg, seed)?),
        Method::TwoPhase => FittedMethod::TwoPhase(Box::new(fit_two_phase(x, labels, cfg, seed)?)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }

    #[test]
    fn confidence_is_capped() {
        let svm = SvmModel::from_parts(FeatureMatrix::zeros(0, 1), vec![], 0.0, KernelParams::new(1.0, 1.0), 2.0);
        let forest = build_forest(&FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]), 1, 2, 0).unwrap();
        let m = TwoPhaseModel {
            forest,
            threshold: ThresholdConfig::default(),
            tau: 0.5,
            svm,
        };
        assert_eq!(m.confidence(-1.0), 0.5);
        assert_eq!(m.confidence(5.0), 1.0);
    }
}
