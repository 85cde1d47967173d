//! Isolation forest pre-filter.
//!
//! Trees isolate points with random axis-parallel splits; points that are
//! isolated after few splits receive scores close to 1. The forest is trained
//! on every row, and the candidate set for pseudo-labeling is drawn from the
//! unlabeled rows using an adaptive `mean + alpha * std` threshold with a
//! contamination floor.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::IforestError;
use crate::matrix::FeatureMatrix;
use crate::rng::{self, Stream};

/// Average path length of an unsuccessful BST search over `n` points:
/// `2 H(n-1) - 2 (n-1) / n`, with `H` the exact harmonic sum. Zero for
/// `n <= 1`.
pub fn c_factor(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * (n - 1) as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Internal {
        feature: usize,
        split: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

/// One isolation tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationTree {
    nodes: Vec<Node>,
    height_limit: usize,
    dim: usize,
}

impl IsolationTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn height_limit(&self) -> usize {
        self.height_limit
    }

    /// Depth of the deepest leaf.
    pub fn height(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// A tree consisting of a single leaf holding `size` points.
    pub fn single_leaf(size: usize, dim: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { size }],
            height_limit: 0,
            dim,
        }
    }

    fn grow<R: Rng>(data: &FeatureMatrix, sample: Vec<usize>, height_limit: usize, rng: &mut R) -> Self {
        let mut tree = IsolationTree {
            nodes: Vec::new(),
            height_limit,
            dim: data.ncols(),
        };
        tree.build(data, sample, 0, rng);
        tree
    }

    fn build<R: Rng>(&mut self, data: &FeatureMatrix, rows: Vec<usize>, depth: usize, rng: &mut R) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= self.height_limit || rows.len() <= 1 {
            return id;
        }
        // features with a nonzero range in this partition
        let mut splittable = Vec::new();
        for f in 0..data.ncols() {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = data.get(r, f);
                (lo.min(v), hi.max(v))
            });
            if hi > lo {
                splittable.push((f, lo, hi));
            }
        }
        if splittable.is_empty() {
            return id;
        }
        let (feature, lo, hi) = splittable[rng.random_range(0..splittable.len())];
        let split = loop {
            let s = rng.random_range(lo..hi);
            if s > lo {
                break s;
            }
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| data.get(r, feature) < split);
        let left = self.build(data, left_rows, depth + 1, rng);
        let right = self.build(data, right_rows, depth + 1, rng);
        self.nodes[id] = Node::Internal {
            feature,
            split,
            left,
            right,
        };
        id
    }
}

/// Edges from the root to the leaf reached by `x`, plus `c_factor(leaf size)`.
pub fn path_length(tree: &IsolationTree, x: &[f64]) -> Result<f64, IforestError> {
    if x.len() != tree.dim {
        return Err(IforestError::DimensionMismatch {
            expected: tree.dim,
            got: x.len(),
        });
    }
    let mut node = 0;
    let mut depth = 0usize;
    loop {
        match tree.nodes[node] {
            Node::Leaf { size } => return Ok(depth as f64 + c_factor(size)),
            Node::Internal {
                feature,
                split,
                left,
                right,
            } => {
                node = if x[feature] < split { left } else { right };
                depth += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestModel {
    trees: Vec<IsolationTree>,
    subsample_size: usize,
    n_trees: usize,
    normalizer: f64,
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub subsample_size: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            subsample_size: 256,
        }
    }
}

/// Grows `n_trees` isolation trees, each on `min(subsample_size, n)` rows
/// drawn without replacement. Tree `k` uses its own random stream, so the
/// forest is identical regardless of thread scheduling.
pub fn build_forest(
    x: &FeatureMatrix,
    n_trees: usize,
    subsample_size: usize,
    seed: u64,
) -> Result<IsolationForestModel, IforestError> {
    if x.nrows() < 2 {
        return Err(IforestError::TooFewRows(x.nrows()));
    }
    if subsample_size < 2 {
        return Err(IforestError::BadSubsample(subsample_size));
    }
    if n_trees == 0 {
        return Err(IforestError::NoTrees);
    }
    let psi = subsample_size.min(x.nrows());
    let height_limit = (psi as f64).log2().ceil() as usize;
    let trees = (0..n_trees)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::substream(seed, Stream::Forest, k as u64);
            let sample = index::sample(&mut rng, x.nrows(), psi).into_vec();
            IsolationTree::grow(x, sample, height_limit, &mut rng)
        })
        .collect();
    Ok(IsolationForestModel {
        trees,
        subsample_size: psi,
        n_trees,
        normalizer: c_factor(psi),
        seed,
    })
}

/// `2^(-mean_path / normalizer)`.
pub fn score_from_path(mean_path: f64, normalizer: f64) -> f64 {
    (-mean_path / normalizer).exp2()
}

impl IsolationForestModel {
    pub fn trees(&self) -> &[IsolationTree] {
        &self.trees
    }

    /// Rows actually used per tree, `min(psi, n)`.
    pub fn subsample_size(&self) -> usize {
        self.subsample_size
    }

    pub fn n_trees(&self) -> usize {
        self.n_trees
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean_path_length(&self, x: &[f64]) -> Result<f64, IforestError> {
        let mut total = 0.0;
        for t in &self.trees {
            total += path_length(t, x)?;
        }
        Ok(total / self.trees.len() as f64)
    }

    pub fn anomaly_score(&self, x: &[f64]) -> Result<f64, IforestError> {
        Ok(score_from_path(self.mean_path_length(x)?, self.normalizer))
    }

    /// Scores every row, in parallel.
    pub fn score_all(&self, x: &FeatureMatrix) -> Result<Vec<f64>, IforestError> {
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.anomaly_score(x.row(i)))
            .collect()
    }
}

pub fn anomaly_score(model: &IsolationForestModel, x: &[f64]) -> Result<f64, IforestError> {
    model.anomaly_score(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdConfig {
    pub alpha: f64,
    pub contamination: f64,
    /// When false the contamination floor is not applied and the candidate
    /// set is exactly `{s >= tau}`.
    pub contamination_floor: bool,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            contamination: 0.05,
            contamination_floor: true,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), IforestError> {
        if !(self.alpha >= 0.0) {
            return Err(IforestError::BadThresholdConfig(format!("alpha {} < 0", self.alpha)));
        }
        if !(self.contamination > 0.0 && self.contamination < 1.0) {
            return Err(IforestError::BadThresholdConfig(format!(
                "contamination {} outside (0, 1)",
                self.contamination
            )));
        }
        Ok(())
    }
}

/// `mean + alpha * sigma`, population standard deviation.
pub fn adaptive_threshold(scores: &[f64], alpha: f64) -> Result<f64, IforestError> {
    if scores.len() < 2 {
        return Err(IforestError::TooFewScores(scores.len()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Ok(mean + alpha * var.sqrt())
}

/// Candidate selection over the scores of unlabeled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    /// Positions into the score vector, ascending.
    pub indices: Vec<usize>,
    pub threshold: f64,
    /// How many rows cleared the threshold before the floor was applied.
    pub above_threshold: usize,
}

/// Rows with `s >= tau`, extended by the next-highest scores up to
/// `ceil(contamination * n)` when the floor is enabled. Ties go to the lower
/// index.
pub fn candidate_set(scores: &[f64], cfg: &ThresholdConfig) -> Result<CandidateSet, IforestError> {
    if scores.is_empty() {
        return Err(IforestError::EmptyScores);
    }
    cfg.validate()?;
    let threshold = if scores.len() >= 2 {
        adaptive_threshold(scores, cfg.alpha)?
    } else {
        scores[0]
    };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let above_threshold = order.iter().take_while(|&&i| scores[i] >= threshold).count();
    let floor = if cfg.contamination_floor {
        (cfg.contamination * scores.len() as f64).ceil() as usize
    } else {
        0
    };
    let take = above_threshold.max(floor).min(scores.len());
    let mut indices = order[..take].to_vec();
    indices.sort_unstable();
    Ok(CandidateSet {
        indices,
        threshold,
        above_threshold,
    })
}

/// Writes `index,score` rows for audit.
pub fn write_scores_csv<W: Write>(mut out: W, indices: &[usize], scores: &[f64]) -> std::io::Result<()> {
    writeln!(out, "index,score")?;
    for (i, s) in indices.iter().zip(scores) {
        writeln!(out, "{i},{s}")?;
    }
    Ok(())
}
