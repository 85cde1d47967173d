//! Class-weighted soft-margin SVM with an RBF kernel.
//!
//! Training solves the dual
//!
//! ```text
//! max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C * w(y_i),  sum(a_i y_i) = 0
//! ```
//!
//! by pairwise coordinate ascent: each step picks the maximal violating pair
//! (second index by the largest second-order gain) and solves the two-variable
//! subproblem in closed form. Labels are `{0, 1}` at the API and `{-1, +1}`
//! inside the solver.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_folds, LabelVector, SplitSpec};
use crate::error::SvmError;
use crate::eval::{confusion, prf_metrics};
use crate::matrix::FeatureMatrix;

/// Largest training set for which the full kernel matrix is cached.
pub const FULL_CACHE_LIMIT: usize = 8192;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma: f64,
    pub c: f64,
    pub class_weight_fraud: f64,
    pub class_weight_legit: f64,
}

impl KernelParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self {
            gamma,
            c,
            class_weight_fraud: 1.0,
            class_weight_legit: 1.0,
        }
    }

    /// Same `C` and `gamma` with the given class weights.
    pub fn with_weights(self, (fraud, legit): (f64, f64)) -> Self {
        Self {
            class_weight_fraud: fraud,
            class_weight_legit: legit,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.gamma) || !ok(self.c) || !ok(self.class_weight_fraud) || !ok(self.class_weight_legit) {
            return Err(SvmError::BadParams(format!("{self:?}")));
        }
        Ok(())
    }

    /// Box bound for a sample of class `y` (`0` or `1`).
    pub fn box_bound(&self, y: u8) -> f64 {
        self.c
            * if y == 1 {
                self.class_weight_fraud
            } else {
                self.class_weight_legit
            }
    }
}

/// Inverse-frequency weights `n / (2 n_c)`, rescaled so legit is 1.
/// Returns `(fraud, legit)`.
pub fn class_weights(y: &[u8]) -> (f64, f64) {
    let fraud = y.iter().filter(|&&v| v == 1).count();
    let legit = y.len() - fraud;
    if fraud == 0 || legit == 0 {
        return (1.0, 1.0);
    }
    (legit as f64 / fraud as f64, 1.0)
}

#[inline]
fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
fn rbf(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(x, z)).exp()
}

/// `exp(-gamma * ||x - z||^2)`.
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    Ok(rbf(x, z, gamma))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    support_vectors: FeatureMatrix,
    /// `alpha_i * y_i` per support vector.
    dual_coeffs: Vec<f64>,
    bias: f64,
    params: KernelParams,
    max_abs_decision_on_train: f64,
}

impl SvmModel {
    /// A model from explicit parts, mainly for tests and tooling.
    pub fn from_parts(
        support_vectors: FeatureMatrix,
        dual_coeffs: Vec<f64>,
        bias: f64,
        params: KernelParams,
        max_abs_decision_on_train: f64,
    ) -> Self {
        assert_eq!(support_vectors.nrows(), dual_coeffs.len());
        Self {
            support_vectors,
            dual_coeffs,
            bias,
            params,
            max_abs_decision_on_train,
        }
    }

    pub fn support_vectors(&self) -> &FeatureMatrix {
        &self.support_vectors
    }

    pub fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn max_abs_decision_on_train(&self) -> f64 {
        self.max_abs_decision_on_train
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    /// `sum_i coeff_i K(sv_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if self.support_vectors.nrows() > 0 && x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let gamma = self.params.gamma;
        let sum: f64 = self
            .support_vectors
            .rows_iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, a)| a * rbf(sv, x, gamma))
            .sum();
        Ok(sum + self.bias)
    }

    /// Fraud (1) iff the decision value is strictly positive.
    pub fn predict(&self, x: &[f64]) -> Result<u8, SvmError> {
        Ok(label_of(self.decision_value(x)?))
    }

    pub fn decision_values(&self, x: &FeatureMatrix) -> Result<Vec<f64>, SvmError> {
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.decision_value(x.row(i)))
            .collect()
    }
}

pub fn decision_value(model: &SvmModel, x: &[f64]) -> Result<f64, SvmError> {
    model.decision_value(x)
}

/// Zero maps to legit.
pub fn label_of(decision: f64) -> u8 {
    u8::from(decision > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation drops to this value.
    pub tol: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_passes: 200,
        }
    }
}

/// A trained model plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SvmModel,
    /// Dual variables for every training row, in input order.
    pub alphas: Vec<f64>,
    pub iterations: usize,
    /// Maximal KKT violation at exit.
    pub kkt_violation: f64,
    pub converged: bool,
}

enum KernelRows<'a> {
    Full { n: usize, k: Vec<f64> },
    OnDemand { x: &'a FeatureMatrix, gamma: f64 },
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a FeatureMatrix, gamma: f64) -> Self {
        let n = x.nrows();
        if n <= FULL_CACHE_LIMIT {
            let mut k = vec![0.0; n * n];
            k.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
                let xi = x.row(i);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = rbf(xi, x.row(j), gamma);
                }
            });
            KernelRows::Full { n, k }
        } else {
            KernelRows::OnDemand { x, gamma }
        }
    }

    fn row(&self, i: usize) -> Cow<'_, [f64]> {
        match self {
            KernelRows::Full { n, k } => Cow::Borrowed(&k[i * n..(i + 1) * n]),
            KernelRows::OnDemand { x, gamma } => {
                let xi = x.row(i);
                Cow::Owned(x.rows_iter().map(|xj| rbf(xi, xj, *gamma)).collect())
            }
        }
    }
}

/// Trains on rows of `x` with `{0, 1}` labels `y`.
///
/// Running out of iterations is not an error: the outcome carries
/// `converged = false` and the final KKT violation.
pub fn train_svm(
    x: &FeatureMatrix,
    y: &[u8],
    params: &KernelParams,
    opts: &SolverOptions,
) -> Result<TrainOutcome, SvmError> {
    params.validate()?;
    let n = x.nrows();
    if n != y.len() {
        return Err(SvmError::LengthMismatch { rows: n, labels: y.len() });
    }
    if n == 0 {
        return Err(SvmError::Empty);
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(SvmError::BadLabel(bad));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(SvmError::SingleClass);
    }

    let sign: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let bound: Vec<f64> = y.iter().map(|&v| params.box_bound(v)).collect();
    let kernel = KernelRows::new(x, params.gamma);

    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let max_iter = opts.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut violation;

    loop {
        // i: argmax over I_up of -y G
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let up = if sign[t] > 0.0 { alpha[t] < bound[t] } else { alpha[t] > 0.0 };
            if up && -sign[t] * grad[t] >= gmax {
                gmax = -sign[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_gain = f64::INFINITY;
        let k_i = if i_sel != usize::MAX { Some(kernel.row(i_sel)) } else { None };
        for t in 0..n {
            let low = if sign[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < bound[t] };
            if !low {
                continue;
            }
            let v = -sign[t] * grad[t];
            gmin = gmin.min(v);
            if let Some(k_i) = &k_i {
                let b = gmax - v;
                if b > 0.0 {
                    let a = (2.0 - 2.0 * k_i[t]).max(TAU);
                    let gain = -(b * b) / a;
                    if gain <= best_gain {
                        best_gain = gain;
                        j_sel = t;
                    }
                }
            }
        }
        violation = if i_sel == usize::MAX { 0.0 } else { gmax - gmin };
        if violation < opts.tol || j_sel == usize::MAX || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let k_i = k_i.expect("i selected");
        let k_j = kernel.row(j);
        let kij = k_i[j];
        let (ci, cj) = (bound[i], bound[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (2.0 - 2.0 * kij).max(TAU);

        if sign[i] != sign[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        // Q_ti = y_t y_i K_ti
        let (si, sj) = (sign[i] * di, sign[j] * dj);
        for t in 0..n {
            grad[t] += sign[t] * (si * k_i[t] + sj * k_j[t]);
        }
    }

    // bias from free vectors, else the midpoint of the bound-derived interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = sign[t] * grad[t];
        if alpha[t] >= bound[t] {
            if sign[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (ub + lb)
    };
    let bias = -rho;

    // f(x_t) = y_t (G_t + 1) + b
    let max_abs = (0..n)
        .map(|t| (sign[t] * (grad[t] + 1.0) + bias).abs())
        .fold(0.0, f64::max);

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = SvmModel {
        support_vectors: x.select_rows(&sv),
        dual_coeffs: sv.iter().map(|&t| alpha[t] * sign[t]).collect(),
        bias,
        params: *params,
        max_abs_decision_on_train: if max_abs > 0.0 { max_abs } else { 1.0 },
    };
    Ok(TrainOutcome {
        model,
        alphas: alpha,
        iterations,
        kkt_violation: violation,
        converged: violation < opts.tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamGrid {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        Self {
            c_values: vec![0.1, 1.0, 10.0, 100.0],
            gamma_values: vec![0.001, 0.01, 0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub c: f64,
    pub gamma: f64,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    /// Best `(C, gamma)` with class weights computed over all of `y`.
    pub best: KernelParams,
    /// Every evaluated pair, ordered by `C` then `gamma`.
    pub scores: Vec<GridScore>,
}

/// Highest mean F1; on ties the earliest entry wins, which with scores
/// ordered by `(C, gamma)` is the smallest `C`, then the smallest `gamma`.
fn pick_best(scores: &[GridScore]) -> GridScore {
    let mut best = scores[0];
    for s in &scores[1..] {
        if s.mean_f1 > best.mean_f1 {
            best = *s;
        }
    }
    best
}

/// Training sets larger than this run grid cells sequentially to bound the
/// number of kernel caches alive at once.
const PARALLEL_GRID_LIMIT: usize = 2048;

/// Picks `(C, gamma)` by mean F1 over `k` stratified folds of the labeled
/// rows. Ties prefer smaller `C`, then smaller `gamma`.
pub fn grid_search(
    x: &FeatureMatrix,
    y: &[u8],
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<GridSearchResult, SvmError> {
    if grid.c_values.is_empty() || grid.gamma_values.is_empty() {
        return Err(SvmError::EmptyGrid);
    }
    if x.nrows() != y.len() {
        return Err(SvmError::LengthMismatch {
            rows: x.nrows(),
            labels: y.len(),
        });
    }
    let folds = stratified_folds(
        &LabelVector::from_classes(y),
        &SplitSpec {
            labeled_fraction: 1.0,
            n_folds: k,
            seed,
        },
    )?;

    let mut pairs = Vec::new();
    let mut cs = grid.c_values.clone();
    let mut gs = grid.gamma_values.clone();
    cs.sort_by(f64::total_cmp);
    gs.sort_by(f64::total_cmp);
    for &c in &cs {
        for &g in &gs {
            pairs.push((c, g));
        }
    }

    let score_pair = |&(c, gamma): &(f64, f64)| -> GridScore {
        let mut total = 0.0;
        for (f, test) in folds.iter().enumerate() {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let params = KernelParams::new(c, gamma).with_weights(class_weights(&ytr));
            let Ok(out) = train_svm(&x.select_rows(&train), &ytr, &params, opts) else {
                continue; // degenerate fold scores 0
            };
            let pred: Vec<u8> = test
                .iter()
                .map(|&i| out.model.predict(x.row(i)).unwrap_or(0))
                .collect();
            let truth: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            let cm = confusion(&truth, &pred).expect("aligned labels");
            total += prf_metrics(&cm).f1;
        }
        GridScore {
            c,
            gamma,
            mean_f1: total / folds.len() as f64,
        }
    };
    let scores: Vec<GridScore> = if x.nrows() <= PARALLEL_GRID_LIMIT {
        pairs.par_iter().map(score_pair).collect()
    } else {
        pairs.iter().map(score_pair).collect()
    };

    let best = pick_best(&scores);
    Ok(GridSearchResult {
        best: KernelParams::new(best.c, best.gamma).with_weights(class_weights(y)),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn kernel_anchors() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 1.0);
        let v = rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-9);
        assert!((rbf_kernel(&[0.0], &[5.0], 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(rbf_kernel(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn kernel_symmetry_bit_identical() {
        let a = [0.3, -1.2, 4.0];
        let b = [2.0, 0.1, -0.5];
        assert_eq!(rbf_kernel(&a, &b, 0.7).unwrap().to_bits(), rbf_kernel(&b, &a, 0.7).unwrap().to_bits());
    }

    #[test]
    fn class_weights_inverse_frequency() {
        let y = [1, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        assert_eq!(class_weights(&y), (9.0, 1.0));
    }

    #[test]
    fn two_point_problem_is_antisymmetric() {
        // optimum: a1 = a2 = 1 / (1 - e^{-4}) since both are free and b = 0
        let x = FeatureMatrix::from_rows(&[vec![-1.0], vec![1.0]]);
        let out = train_svm(&x, &[0, 1], &KernelParams::new(10.0, 1.0), &opts()).unwrap();
        let m = &out.model;
        assert_eq!(m.predict(&[-1.0]).unwrap(), 0);
        assert_eq!(m.predict(&[1.0]).unwrap(), 1);
        for p in [0.25, 0.5, 1.0, 2.0] {
            let (a, b) = (m.decision_value(&[p]).unwrap(), m.decision_value(&[-p]).unwrap());
            assert!((a + b).abs() < 1e-6);
        }
        assert!(m.decision_value(&[0.0]).unwrap().abs() < 1e-6);
        let expected = 1.0 / (1.0 - (-4f64).exp());
        assert!((out.alphas[0] - expected).abs() < 1e-3);
    }

    #[test]
    fn zero_coefficient_model() {
        let m = SvmModel::from_parts(FeatureMatrix::zeros(0, 2), vec![], -0.3, KernelParams::new(1.0, 1.0), 1.0);
        assert_eq!(m.decision_value(&[5.0, 1.0]).unwrap(), -0.3);
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn zero_decision_is_legit() {
        assert_eq!(label_of(0.0), 0);
        assert_eq!(label_of(1e-300), 1);
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.6;
            rows.push(vec![-2.0 + 0.3 * t.sin(), -2.0 + 0.3 * t.cos()]);
            y.push(0);
            rows.push(vec![2.0 + 0.3 * t.cos(), 2.0 + 0.3 * t.sin()]);
            y.push(1);
        }
        let x = FeatureMatrix::from_rows(&rows);
        let out = train_svm(&x, &y, &KernelParams::new(10.0, 0.5), &opts()).unwrap();
        assert!(out.converged);
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(out.model.predict(x.row(i)).unwrap(), label);
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(matches!(
            train_svm(&x, &[1, 1], &KernelParams::new(1.0, 1.0), &opts()),
            Err(SvmError::SingleClass)
        ));
    }

    #[test]
    fn non_convergence_still_returns_model() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 1.7).sin(), (i as f64 * 0.3).cos()]).collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let out = train_svm(&x, &y, &KernelParams::new(100.0, 1.0), &SolverOptions { tol: 1e-12, max_passes: 0 }).unwrap();
        assert!(!out.converged);
        assert!(out.kkt_violation > 0.0);
    }

    #[test]
    fn weighted_box_bounds_hold() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64 * 0.9).sin() * 2.0, (i as f64 * 0.4).cos()]).collect();
        let y: Vec<u8> = (0..60).map(|i| (i % 7 == 0) as u8).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let params = KernelParams::new(1.0, 0.5).with_weights(class_weights(&y));
        let out = train_svm(&x, &y, &params, &opts()).unwrap();
        let mut sum = 0.0;
        for (i, &a) in out.alphas.iter().enumerate() {
            assert!(a >= 0.0 && a <= params.box_bound(y[i]) + 1e-9);
            sum += if y[i] == 1 { a } else { -a };
        }
        assert!(sum.abs() < 1e-6);
    }

    #[test]
    fn grid_single_pair_returned() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 10.0]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i >= 20) as u8).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let grid = ParamGrid { c_values: vec![3.0], gamma_values: vec![0.2] };
        let r = grid_search(&x, &y, &grid, 5, 0, &opts()).unwrap();
        assert_eq!((r.best.c, r.best.gamma), (3.0, 0.2));
        assert_eq!(r.scores.len(), 1);
    }

    #[test]
    fn grid_default_shape() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.77).sin(), (i % 8) as f64]).collect();
        let y: Vec<u8> = (0..40).map(|i| (i % 8 == 0) as u8).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let r = grid_search(&x, &y, &ParamGrid::default(), 5, 1, &opts()).unwrap();
        assert_eq!(r.scores.len(), 16);
        let pairs: Vec<(f64, f64)> = r.scores.iter().map(|s| (s.c, s.gamma)).collect();
        assert_eq!(pairs[0], (0.1, 0.001));
        assert_eq!(pairs[15], (100.0, 1.0));
    }

    #[test]
    fn grid_tie_break_prefers_simplest() {
        let grid = ParamGrid::default();
        let mut scores = Vec::new();
        for &c in &grid.c_values {
            for &gamma in &grid.gamma_values {
                scores.push(GridScore { c, gamma, mean_f1: 0.0 });
            }
        }
        let best = pick_best(&scores);
        assert_eq!((best.c, best.gamma), (0.1, 0.001));
        scores[5].mean_f1 = 0.5;
        scores[9].mean_f1 = 0.5;
        assert_eq!(pick_best(&scores), scores[5]);
    }
}
