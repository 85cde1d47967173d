//! Two-phase fraud detection for supply-chain transactions.
//!
//! An isolation forest flags unlabeled rows that look anomalous; an
//! RBF-kernel SVM trained on the few labeled rows is then refined by
//! self-training on those candidates, with per-class confidence thresholds
//! that keep the rare fraud class from being swamped.

pub mod artifact;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod iforest;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod selftrain;
pub mod svm;
pub mod synthetic;

pub use error::{Error, Result};
pub use matrix::FeatureMatrix;
