//! Feature pipeline: imputation, encoding, scaling, selection.
//!
//! [`fit_pipeline`] learns every statistic from the table it is given and
//! nothing else; [`transform`] applies the frozen statistics to any table with
//! the same schema.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnSchema, ColumnType, Label, LabelVector, RawTable};
use crate::error::PreprocessError;
use crate::matrix::FeatureMatrix;

/// How a raw column is turned into features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    /// Median-imputed, standard-scaled.
    Numeric,
    /// One-hot when cardinality is at most `one_hot_max_cardinality`,
    /// target-encoded otherwise.
    Categorical,
    /// Always one-hot; cardinality above the limit is an error.
    OneHot,
    TargetEncoded,
    /// Min-max scaled to [0, 1].
    Percentage,
    /// Signed `log1p`, no further scaling.
    SkewedFinancial,
    /// `(sin, cos)` of `2*pi*value/period`.
    TemporalCyclic { period: f64 },
    /// Forward-filled in row order, then standard-scaled.
    DateSequential,
    Drop,
}

impl Role {
    fn name(&self) -> &'static str {
        match self {
            Role::Numeric => "numeric",
            Role::Categorical => "categorical",
            Role::OneHot => "one_hot",
            Role::TargetEncoded => "target_encoded",
            Role::Percentage => "percentage",
            Role::SkewedFinancial => "skewed_financial",
            Role::TemporalCyclic { .. } => "temporal_cyclic",
            Role::DateSequential => "date_sequential",
            Role::Drop => "drop",
        }
    }

    fn accepts(&self, kind: ColumnType) -> bool {
        match self {
            Role::Numeric | Role::Percentage | Role::SkewedFinancial | Role::TemporalCyclic { .. } => {
                kind == ColumnType::Numeric
            }
            Role::Categorical | Role::OneHot | Role::TargetEncoded => kind == ColumnType::Categorical,
            Role::DateSequential => kind == ColumnType::Date,
            Role::Drop => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRole {
    pub name: String,
    #[serde(flatten)]
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub columns: Vec<ColumnRole>,
    /// Categorical column whose groups supply medians for numeric imputation.
    pub group_by: Option<String>,
    pub one_hot_max_cardinality: usize,
    pub missing_drop_threshold: f64,
    pub correlation_drop_threshold: f64,
    /// Pseudo-count `m` of the target-encoding prior.
    pub target_smoothing: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            columns: Vec::new(),
            group_by: None,
            one_hot_max_cardinality: 10,
            missing_drop_threshold: 0.80,
            correlation_drop_threshold: 0.95,
            target_smoothing: 10.0,
        }
    }
}

impl PreprocessConfig {
    /// Every column of `schema` tagged with `role`.
    pub fn uniform(schema: &[ColumnSchema], role: Role) -> Self {
        Self {
            columns: schema
                .iter()
                .map(|c| ColumnRole {
                    name: c.name.clone(),
                    role: role.clone(),
                })
                .collect(),
            ..Default::default()
        }
    }

    pub fn role_of(&self, name: &str) -> Option<&Role> {
        self.columns.iter().find(|c| c.name == name).map(|c| &c.role)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Scaling {
    Standard { mean: f64, std: f64 },
    MinMax { min: f64, max: f64 },
    SignedLog1p,
    Cyclic { period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Stage {
    Numeric {
        group_medians: BTreeMap<String, f64>,
        global_median: f64,
        scaling: Scaling,
    },
    OneHot {
        mode: String,
        categories: Vec<String>,
    },
    Target {
        mode: String,
        encoding: BTreeMap<String, f64>,
        global: f64,
    },
    Date {
        fallback: i64,
        mean: f64,
        std: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FittedColumn {
    source: usize,
    stage: Stage,
}

/// Frozen preprocessing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessModel {
    schema: Vec<ColumnSchema>,
    group_by: Option<usize>,
    fitted: Vec<FittedColumn>,
    /// Indices into the pre-selection output that survive the correlation
    /// filter.
    keep: Vec<usize>,
    feature_names: Vec<String>,
    missing_dropped: Vec<String>,
    correlation_dropped: Vec<String>,
}

impl PreprocessModel {
    pub fn output_dim(&self) -> usize {
        self.keep.len()
    }

    /// Names of the retained output features, in column order.
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    /// Input columns removed for exceeding the missing-rate threshold.
    pub fn missing_dropped(&self) -> &[String] {
        &self.missing_dropped
    }

    /// Output features removed by the correlation filter.
    pub fn correlation_dropped(&self) -> &[String] {
        &self.correlation_dropped
    }
}

/// Sample Pearson correlation.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, PreprocessError> {
    if x.len() != y.len() {
        return Err(PreprocessError::UndefinedCorrelation("length mismatch"));
    }
    if x.len() < 2 {
        return Err(PreprocessError::UndefinedCorrelation("fewer than 2 points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(PreprocessError::UndefinedCorrelation("constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 0.0 { std } else { 1.0 })
}

/// Most frequent value; ties go to the lexicographically smallest.
fn mode(values: &[Option<String>]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values.iter().flatten() {
        *counts.entry(v.as_str()).or_default() += 1;
    }
    let mut best: Option<(&str, usize)> = None;
    for (k, c) in counts {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((k, c));
        }
    }
    best.map_or_else(|| "Unknown".to_string(), |(k, _)| k.to_string())
}

fn signed_log1p(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

fn group_keys(table: &RawTable, group_by: Option<usize>) -> Option<&Vec<Option<String>>> {
    match group_by.map(|g| &table.columns()[g]) {
        Some(Column::Categorical(v)) => Some(v),
        _ => None,
    }
}

fn impute_numeric(
    values: &[Option<f64>],
    groups: Option<&Vec<Option<String>>>,
    group_medians: &BTreeMap<String, f64>,
    global_median: f64,
) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.unwrap_or_else(|| {
                groups
                    .and_then(|g| g[i].as_ref())
                    .and_then(|k| group_medians.get(k))
                    .copied()
                    .unwrap_or(global_median)
            })
        })
        .collect()
}

fn forward_fill(values: &[Option<i64>], fallback: i64) -> Vec<f64> {
    let mut last = None;
    values
        .iter()
        .map(|v| {
            if v.is_some() {
                last = *v;
            }
            last.unwrap_or(fallback) as f64
        })
        .collect()
}

impl FittedColumn {
    fn output_names(&self, name: &str) -> Vec<String> {
        match &self.stage {
            Stage::Numeric {
                scaling: Scaling::Cyclic { .. },
                ..
            } => vec![format!("{name}_sin"), format!("{name}_cos")],
            Stage::Numeric { .. } | Stage::Date { .. } => vec![name.to_string()],
            Stage::OneHot { categories, .. } => categories.iter().map(|c| format!("{name}={c}")).collect(),
            Stage::Target { .. } => vec![format!("{name}_te")],
        }
    }

    /// Encoded output columns for every row of `table`.
    fn apply(&self, table: &RawTable, group_by: Option<usize>) -> Vec<Vec<f64>> {
        let col = &table.columns()[self.source];
        match (&self.stage, col) {
            (
                Stage::Numeric {
                    group_medians,
                    global_median,
                    scaling,
                },
                Column::Numeric(v),
            ) => {
                let x = impute_numeric(v, group_keys(table, group_by), group_medians, *global_median);
                match scaling {
                    Scaling::Standard { mean, std } => vec![x.iter().map(|v| (v - mean) / std).collect()],
                    Scaling::MinMax { min, max } => {
                        let range = max - min;
                        vec![x
                            .iter()
                            .map(|v| if range > 0.0 { (v - min) / range } else { 0.0 })
                            .collect()]
                    }
                    Scaling::SignedLog1p => vec![x.iter().map(|&v| signed_log1p(v)).collect()],
                    Scaling::Cyclic { period } => {
                        let angle: Vec<f64> = x.iter().map(|v| 2.0 * PI * v / period).collect();
                        vec![
                            angle.iter().map(|a| a.sin()).collect(),
                            angle.iter().map(|a| a.cos()).collect(),
                        ]
                    }
                }
            }
            (Stage::OneHot { mode, categories }, Column::Categorical(v)) => {
                let mut out = vec![vec![0.0; v.len()]; categories.len()];
                for (i, cell) in v.iter().enumerate() {
                    let value = cell.as_deref().unwrap_or(mode);
                    if let Ok(k) = categories.binary_search_by(|c| c.as_str().cmp(value)) {
                        out[k][i] = 1.0;
                    }
                }
                out
            }
            (Stage::Target { mode, encoding, global }, Column::Categorical(v)) => {
                vec![v
                    .iter()
                    .map(|cell| {
                        let value = cell.as_deref().unwrap_or(mode);
                        encoding.get(value).copied().unwrap_or(*global)
                    })
                    .collect()]
            }
            (Stage::Date { fallback, mean, std }, Column::Date(v)) => {
                vec![forward_fill(v, *fallback).iter().map(|x| (x - mean) / std).collect()]
            }
            _ => unreachable!("schema checked before apply"),
        }
    }
}

fn check_threshold(name: &'static str, value: f64) -> Result<(), PreprocessError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(PreprocessError::BadThreshold { name, value })
    }
}

/// Learns imputation, encoding, scaling and selection state from `table`.
///
/// `labels` annotates the rows of `table`; only observed labels feed target
/// encoding.
pub fn fit_pipeline(
    table: &RawTable,
    labels: &LabelVector,
    config: &PreprocessConfig,
) -> Result<PreprocessModel, PreprocessError> {
    if table.row_count() == 0 {
        return Err(PreprocessError::EmptyTable);
    }
    if labels.len() != table.row_count() {
        return Err(PreprocessError::LabelLength {
            labels: labels.len(),
            rows: table.row_count(),
        });
    }
    check_threshold("missing_drop_threshold", config.missing_drop_threshold)?;
    check_threshold("correlation_drop_threshold", config.correlation_drop_threshold)?;
    for c in &config.columns {
        if table.column_index(&c.name).is_none() {
            return Err(PreprocessError::UnknownRoleColumn(c.name.clone()));
        }
    }
    let group_by = match &config.group_by {
        Some(g) => {
            let idx = table
                .column_index(g)
                .ok_or_else(|| PreprocessError::UnknownRoleColumn(g.clone()))?;
            if table.columns()[idx].kind() != ColumnType::Categorical {
                return Err(PreprocessError::BadGroupColumn(g.clone()));
            }
            Some(idx)
        }
        None => None,
    };
    let groups = group_keys(table, group_by);
    let n = table.row_count();

    let mut fitted = Vec::new();
    let mut pre_names = Vec::new();
    let mut missing_dropped = Vec::new();

    for (source, (name, col)) in table.column_names().iter().zip(table.columns()).enumerate() {
        let role = config
            .role_of(name)
            .ok_or_else(|| PreprocessError::MissingRole(name.clone()))?;
        if !role.accepts(col.kind()) {
            return Err(PreprocessError::RoleTypeMismatch {
                column: name.clone(),
                role: role.name(),
                kind: col.kind().name(),
            });
        }
        if *role == Role::Drop {
            continue;
        }
        if col.missing_count() as f64 / n as f64 > config.missing_drop_threshold {
            missing_dropped.push(name.clone());
            continue;
        }

        let stage = match (role, col) {
            (_, Column::Numeric(v)) => {
                let mut observed: Vec<f64> = v.iter().flatten().copied().collect();
                let global_median =
                    median(&mut observed).ok_or_else(|| PreprocessError::AllMissing(name.clone()))?;
                let mut group_medians = BTreeMap::new();
                if let Some(g) = groups {
                    let mut per_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
                    for (key, x) in g.iter().zip(v) {
                        if let (Some(k), Some(x)) = (key, x) {
                            per_group.entry(k.as_str()).or_default().push(*x);
                        }
                    }
                    for (k, mut xs) in per_group {
                        if let Some(m) = median(&mut xs) {
                            group_medians.insert(k.to_string(), m);
                        }
                    }
                }
                let imputed = impute_numeric(v, groups, &group_medians, global_median);
                let scaling = match role {
                    Role::Numeric => {
                        let (mean, std) = mean_std(&imputed);
                        Scaling::Standard { mean, std }
                    }
                    Role::Percentage => Scaling::MinMax {
                        min: imputed.iter().copied().fold(f64::INFINITY, f64::min),
                        max: imputed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    },
                    Role::SkewedFinancial => Scaling::SignedLog1p,
                    Role::TemporalCyclic { period } => Scaling::Cyclic { period: *period },
                    _ => unreachable!(),
                };
                Stage::Numeric {
                    group_medians,
                    global_median,
                    scaling,
                }
            }
            (_, Column::Categorical(v)) => {
                let mode = mode(v);
                let categories: BTreeSet<&str> = v.iter().map(|c| c.as_deref().unwrap_or(&mode)).collect();
                let one_hot = match role {
                    Role::OneHot => {
                        if categories.len() > config.one_hot_max_cardinality {
                            return Err(PreprocessError::CardinalityTooHigh {
                                column: name.clone(),
                                cardinality: categories.len(),
                                max: config.one_hot_max_cardinality,
                            });
                        }
                        true
                    }
                    Role::TargetEncoded => false,
                    _ => categories.len() <= config.one_hot_max_cardinality,
                };
                if one_hot {
                    Stage::OneHot {
                        categories: categories.iter().map(|s| s.to_string()).collect(),
                        mode,
                    }
                } else {
                    let mut sums: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
                    let (mut total, mut count) = (0.0, 0.0);
                    for (cell, label) in v.iter().zip(labels.values()) {
                        if let Some(y) = label.class() {
                            let key = cell.as_deref().unwrap_or(&mode);
                            let e = sums.entry(key).or_default();
                            e.0 += y as f64;
                            e.1 += 1.0;
                            total += y as f64;
                            count += 1.0;
                        }
                    }
                    if count == 0.0 {
                        return Err(PreprocessError::NoObservedLabels(name.clone()));
                    }
                    let global = total / count;
                    let m = config.target_smoothing;
                    let encoding = sums
                        .into_iter()
                        .map(|(k, (s, c))| (k.to_string(), (s + m * global) / (c + m)))
                        .collect();
                    Stage::Target { mode, encoding, global }
                }
            }
            (_, Column::Date(v)) => {
                let mut observed: Vec<f64> = v.iter().flatten().map(|&t| t as f64).collect();
                let fallback =
                    median(&mut observed).ok_or_else(|| PreprocessError::AllMissing(name.clone()))? as i64;
                let filled = forward_fill(v, fallback);
                let (mean, std) = mean_std(&filled);
                Stage::Date { fallback, mean, std }
            }
        };
        let fc = FittedColumn { source, stage };
        pre_names.extend(fc.output_names(name));
        fitted.push(fc);
    }

    let mut model = PreprocessModel {
        schema: table.schema(),
        group_by,
        fitted,
        keep: (0..pre_names.len()).collect(),
        feature_names: Vec::new(),
        missing_dropped,
        correlation_dropped: Vec::new(),
    };

    // correlation filter over the encoded fit table
    let outputs = encode_all(&model, table);
    let mut keep: Vec<usize> = Vec::new();
    for j in 0..outputs.len() {
        let redundant = keep.iter().any(|&i| {
            pearson_correlation(&outputs[i], &outputs[j])
                .map(|r| r.abs() > config.correlation_drop_threshold)
                .unwrap_or(false)
        });
        if redundant {
            model.correlation_dropped.push(pre_names[j].clone());
        } else {
            keep.push(j);
        }
    }
    model.feature_names = keep.iter().map(|&j| pre_names[j].clone()).collect();
    model.keep = keep;
    Ok(model)
}

fn encode_all(model: &PreprocessModel, table: &RawTable) -> Vec<Vec<f64>> {
    model
        .fitted
        .iter()
        .flat_map(|f| f.apply(table, model.group_by))
        .collect()
}

/// Applies a fitted pipeline, producing an `n x d` matrix.
pub fn transform(model: &PreprocessModel, table: &RawTable) -> Result<FeatureMatrix, PreprocessError> {
    let schema = table.schema();
    if schema != model.schema {
        let detail = if schema.len() != model.schema.len() {
            format!("expected {} columns, got {}", model.schema.len(), schema.len())
        } else {
            let (want, got) = model
                .schema
                .iter()
                .zip(&schema)
                .find(|(a, b)| a != b)
                .expect("schemas differ");
            format!(
                "expected `{}` ({}), got `{}` ({})",
                want.name,
                want.kind.name(),
                got.name,
                got.kind.name()
            )
        };
        return Err(PreprocessError::SchemaMismatch(detail));
    }
    let outputs = encode_all(model, table);
    let n = table.row_count();
    let d = model.keep.len();
    let mut m = FeatureMatrix::zeros(n, d);
    for (out_j, &j) in model.keep.iter().enumerate() {
        for (i, v) in outputs[j].iter().enumerate() {
            m.set(i, out_j, *v);
        }
    }
    Ok(m)
}

/// Observed labels restricted to `rows`, for fitting on a subset.
pub fn labels_for_rows(labels: &LabelVector, rows: &[usize]) -> LabelVector {
    LabelVector::new(rows.iter().map(|&r| labels.get(r)).collect::<Vec<Label>>())
}
