//! Synthetic imbalanced transaction data.
//!
//! Legitimate rows form `n_clusters` unit-variance Gaussian clusters. Fraud
//! rows either sit in a shifted cluster (`OffsetCluster`) or are scattered
//! uniformly over a wide box (`UniformScatter`). A `label_noise` fraction of
//! rows has its label flipped after generation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnSchema, ColumnType, LabelVector, RawTable};
use crate::error::DatasetError;
use crate::matrix::FeatureMatrix;
use crate::rng::{self, Stream};

pub const LABEL_COLUMN: &str = "fraud";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FraudMode {
    OffsetCluster,
    UniformScatter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub fraud_rate: f64,
    pub n_clusters: usize,
    /// Spread of legitimate cluster centres (uniform in `[-s, s]^d`).
    pub cluster_spread: f64,
    pub mode: FraudMode,
    /// Distance of the fraud cluster from the origin along the diagonal.
    pub fraud_offset: f64,
    /// Standard deviation of the fraud cluster.
    pub fraud_scale: f64,
    /// Fraction of rows whose label is flipped.
    pub label_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            d: 8,
            fraud_rate: 0.015,
            n_clusters: 3,
            cluster_spread: 2.0,
            mode: FraudMode::OffsetCluster,
            fraud_offset: 4.0,
            fraud_scale: 0.7,
            label_noise: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::BadSpec(m));
        if self.n == 0 || self.d == 0 {
            return bad(format!("n and d must be positive (n={}, d={})", self.n, self.d));
        }
        if !(0.0..=1.0).contains(&self.fraud_rate) {
            return bad(format!("fraud_rate {} outside [0, 1]", self.fraud_rate));
        }
        if self.n_clusters == 0 {
            return bad("n_clusters must be positive".into());
        }
        if !(self.fraud_scale > 0.0) || !(self.cluster_spread >= 0.0) {
            return bad("fraud_scale must be positive and cluster_spread non-negative".into());
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return bad(format!("label_noise {} outside [0, 0.5)", self.label_noise));
        }
        Ok(())
    }

    pub fn fraud_count(&self) -> usize {
        (self.fraud_rate * self.n as f64).round() as usize
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        let mut s: Vec<ColumnSchema> = (0..self.d).map(|j| ColumnSchema::new(format!("f{j}"), ColumnType::Numeric)).collect();
        s.push(ColumnSchema::new(LABEL_COLUMN, ColumnType::Numeric));
        s
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub x: FeatureMatrix,
    pub y: Vec<u8>,
}

impl SyntheticData {
    pub fn labels(&self) -> LabelVector {
        LabelVector::from_classes(&self.y)
    }

    /// Feature columns `f0..f{d-1}` without the label.
    pub fn feature_table(&self) -> RawTable {
        let names = (0..self.x.ncols()).map(|j| format!("f{j}")).collect();
        let cols = (0..self.x.ncols())
            .map(|j| Column::Numeric(self.x.column(j).into_iter().map(Some).collect()))
            .collect();
        RawTable::new(names, cols).expect("generated columns are consistent")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.x.ncols()).map(|j| format!("f{j}")).collect();
        header.push(LABEL_COLUMN.into());
        w.write_record(&header)?;
        for (row, y) in self.x.rows_iter().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(y.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Draws a dataset; the fraud count before label noise is exactly
/// `round(fraud_rate * n)`.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData, DatasetError> {
    spec.validate()?;
    let mut rng = rng::stream(seed, Stream::Synthetic);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let d = spec.d;
    let centres: Vec<Vec<f64>> = (0..spec.n_clusters)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if spec.cluster_spread > 0.0 {
                        rng.random_range(-spec.cluster_spread..=spec.cluster_spread)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let n_fraud = spec.fraud_count();
    let mut y: Vec<u8> = (0..spec.n).map(|i| u8::from(i < n_fraud)).collect();
    y.shuffle(&mut rng);

    let box_half = spec.cluster_spread + spec.fraud_offset;
    let mut data = Vec::with_capacity(spec.n * d);
    for &label in &y {
        if label == 0 {
            let c = &centres[rng.random_range(0..spec.n_clusters)];
            data.extend(c.iter().map(|m| m + unit.sample(&mut rng)));
        } else {
            match spec.mode {
                FraudMode::OffsetCluster => {
                    data.extend((0..d).map(|_| spec.fraud_offset + spec.fraud_scale * unit.sample(&mut rng)))
                }
                FraudMode::UniformScatter => data.extend((0..d).map(|_| rng.random_range(-box_half..=box_half))),
            }
        }
    }
    if spec.label_noise > 0.0 {
        let flips = (spec.label_noise * spec.n as f64).round() as usize;
        for i in rand::seq::index::sample(&mut rng, spec.n, flips) {
            y[i] ^= 1;
        }
    }
    Ok(SyntheticData {
        x: FeatureMatrix::new(spec.n, d, data),
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fraud_count() {
        let data = generate(&SyntheticSpec::default(), 0).unwrap();
        assert_eq!(data.y.iter().filter(|&&v| v == 1).count(), 150);
        assert_eq!(data.x.nrows(), 10_000);
    }

    #[test]
    fn zero_rate_is_all_legit() {
        let spec = SyntheticSpec {
            n: 100,
            fraud_rate: 0.0,
            ..Default::default()
        };
        assert!(generate(&spec, 1).unwrap().y.iter().all(|&v| v == 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec {
            n: 200,
            mode: FraudMode::UniformScatter,
            ..Default::default()
        };
        let a = generate(&spec, 3).unwrap();
        let b = generate(&spec, 3).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_ne!(generate(&spec, 4).unwrap().x, a.x);
    }

    #[test]
    fn invalid_spec() {
        let spec = SyntheticSpec {
            fraud_rate: 1.5,
            ..Default::default()
        };
        assert!(generate(&spec, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let spec = SyntheticSpec {
            n: 20,
            d: 2,
            fraud_rate: 0.1,
            ..Default::default()
        };
        let data = generate(&spec, 0).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let table = crate::dataset::read_csv(&buf[..], &spec.schema()).unwrap();
        let (features, label) = table.split_column(LABEL_COLUMN).unwrap();
        assert_eq!(LabelVector::from_column(LABEL_COLUMN, &label).unwrap(), data.labels());
        assert_eq!(features.row_count(), 20);
    }
}
