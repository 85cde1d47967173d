//! Raw tabular data, partially observed labels, and the stratified splits
//! used for cross-validation and labeled/unlabeled masking.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnType {
    Numeric,
    Categorical,
    Date,
}

impl ColumnType {
    pub fn name(self) -> &'static str {
        match self {
            ColumnType::Numeric => "numeric",
            ColumnType::Categorical => "categorical",
            ColumnType::Date => "date",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ColumnType,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: ColumnType) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// One typed column. `None` marks a missing cell; dates are seconds since the
/// Unix epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
    Date(Vec<Option<i64>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
            Column::Date(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnType {
        match self {
            Column::Numeric(_) => ColumnType::Numeric,
            Column::Categorical(_) => ColumnType::Categorical,
            Column::Date(_) => ColumnType::Date,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_none(),
            Column::Categorical(v) => v[row].is_none(),
            Column::Date(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    fn take(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
            Column::Date(v) => Column::Date(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    column_names: Vec<String>,
    columns: Vec<Column>,
    row_count: usize,
}

impl RawTable {
    pub fn new(column_names: Vec<String>, columns: Vec<Column>) -> Result<Self, DatasetError> {
        assert_eq!(column_names.len(), columns.len(), "one name per column");
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(DatasetError::DuplicateColumn(name.clone()));
            }
        }
        let row_count = columns.first().map_or(0, Column::len);
        for (name, col) in column_names.iter().zip(&columns) {
            if col.len() != row_count {
                return Err(DatasetError::RaggedColumn {
                    column: name.clone(),
                    len: col.len(),
                    rows: row_count,
                });
            }
        }
        Ok(Self {
            column_names,
            columns,
            row_count,
        })
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn schema(&self) -> Vec<ColumnSchema> {
        self.column_names
            .iter()
            .zip(&self.columns)
            .map(|(n, c)| ColumnSchema::new(n.clone(), c.kind()))
            .collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    /// Rows in the given order (duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> RawTable {
        RawTable {
            column_names: self.column_names.clone(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            row_count: rows.len(),
        }
    }

    /// Splits off one column, returning the remaining table and the column.
    pub fn split_column(&self, name: &str) -> Result<(RawTable, Column), DatasetError> {
        let idx = self
            .column_index(name)
            .ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))?;
        let mut names = self.column_names.clone();
        let mut cols = self.columns.clone();
        names.remove(idx);
        let col = cols.remove(idx);
        Ok((
            RawTable {
                column_names: names,
                columns: cols,
                row_count: self.row_count,
            },
            col,
        ))
    }
}

const DATE_FORMATS: &[&str] = &["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%m/%d/%Y %H:%M"];

fn parse_date(raw: &str) -> Option<i64> {
    for fmt in DATE_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    for fmt in ["%Y-%m-%d", "%m/%d/%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(raw, fmt) {
            return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
        }
    }
    None
}

/// Reads a CSV file whose header must list exactly the schema's columns, in
/// order. Empty cells become missing markers.
pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<RawTable, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema]) -> Result<RawTable, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for (i, col) in schema.iter().enumerate() {
        match header.get(i) {
            Some(h) if *h == col.name => {}
            Some(h) => {
                return Err(DatasetError::SchemaMismatch {
                    expected: col.name.clone(),
                    found: h.clone(),
                })
            }
            None => return Err(DatasetError::MissingColumn(col.name.clone())),
        }
    }
    if header.len() > schema.len() {
        return Err(DatasetError::SchemaMismatch {
            expected: "<end of schema>".into(),
            found: header[schema.len()].clone(),
        });
    }

    let mut columns: Vec<Column> = schema
        .iter()
        .map(|c| match c.kind {
            ColumnType::Numeric => Column::Numeric(Vec::new()),
            ColumnType::Categorical => Column::Categorical(Vec::new()),
            ColumnType::Date => Column::Date(Vec::new()),
        })
        .collect();

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, col) in columns.iter_mut().enumerate() {
            let raw = record.get(j).unwrap_or("");
            let cell = raw.trim();
            let bad = |kind| DatasetError::UnparseableCell {
                row,
                column: schema[j].name.clone(),
                raw: raw.to_string(),
                kind,
            };
            match col {
                Column::Numeric(v) => {
                    if cell.is_empty() {
                        v.push(None);
                    } else {
                        let x: f64 = cell.parse().map_err(|_| bad("numeric"))?;
                        v.push(if x.is_nan() { None } else { Some(x) });
                    }
                }
                Column::Categorical(v) => {
                    v.push((!cell.is_empty()).then(|| cell.to_string()));
                }
                Column::Date(v) => {
                    if cell.is_empty() {
                        v.push(None);
                    } else {
                        v.push(Some(parse_date(cell).ok_or_else(|| bad("date"))?));
                    }
                }
            }
        }
    }
    RawTable::new(schema.iter().map(|c| c.name.clone()).collect(), columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Legit,
    Fraud,
    Unknown,
}

impl Label {
    pub fn from_class(class: u8) -> Self {
        if class == 1 {
            Label::Fraud
        } else {
            Label::Legit
        }
    }

    /// `Some(0 | 1)` for observed labels.
    pub fn class(self) -> Option<u8> {
        match self {
            Label::Legit => Some(0),
            Label::Fraud => Some(1),
            Label::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    values: Vec<Label>,
}

impl LabelVector {
    pub fn new(values: Vec<Label>) -> Self {
        Self { values }
    }

    pub fn from_classes(classes: &[u8]) -> Self {
        Self::new(classes.iter().map(|&c| Label::from_class(c)).collect())
    }

    /// Reads labels from a column holding `0`, `1` or missing.
    pub fn from_column(name: &str, column: &Column) -> Result<Self, DatasetError> {
        let bad = |row: usize, raw: String| DatasetError::BadLabel {
            column: name.to_string(),
            row,
            raw,
        };
        let values = match column {
            Column::Numeric(v) => v
                .iter()
                .enumerate()
                .map(|(row, x)| match x {
                    None => Ok(Label::Unknown),
                    Some(x) if *x == 0.0 => Ok(Label::Legit),
                    Some(x) if *x == 1.0 => Ok(Label::Fraud),
                    Some(x) => Err(bad(row, x.to_string())),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Column::Categorical(v) => v
                .iter()
                .enumerate()
                .map(|(row, x)| match x.as_deref() {
                    None => Ok(Label::Unknown),
                    Some("0") => Ok(Label::Legit),
                    Some("1") => Ok(Label::Fraud),
                    Some(s) => Err(bad(row, s.to_string())),
                })
                .collect::<Result<Vec<_>, _>>()?,
            Column::Date(_) => return Err(bad(0, "<date column>".into())),
        };
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Label {
        self.values[i]
    }

    pub fn values(&self) -> &[Label] {
        &self.values
    }

    /// The D_L index set.
    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i] != Label::Unknown).collect()
    }

    /// The D_U index set.
    pub fn unknown_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i] == Label::Unknown).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.values.iter().filter(|&&l| l == label).count()
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector::new(rows.iter().map(|&r| self.values[r]).collect())
    }

    fn indices_by_class(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (i, l) in self.values.iter().enumerate() {
            if let Some(c) = l.class() {
                out[c as usize].push(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub labeled_fraction: f64,
    pub n_folds: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            labeled_fraction: 0.10,
            n_folds: 10,
            seed: 0,
        }
    }
}

/// Fails unless every class has at least `k` members, so that each of `k`
/// stratified folds holds both classes.
pub fn require_per_class(labels: &LabelVector, k: usize) -> Result<(), DatasetError> {
    for (class, members) in labels.indices_by_class().iter().enumerate() {
        if members.len() < k {
            return Err(DatasetError::TooFewPerClass {
                class: class as u8,
                count: members.len(),
                needed: k,
            });
        }
    }
    Ok(())
}

/// Partitions the observed rows into `n_folds` stratified folds.
///
/// Each class is shuffled and dealt round-robin, positives first, with the
/// negatives continuing where the positives stopped. Fold sizes and per-fold
/// positive counts therefore each differ by at most one. Returned indices
/// refer to `labels` and are sorted within each fold. A class smaller than
/// `n_folds` leaves some folds without it; see [`require_per_class`].
pub fn stratified_folds(labels: &LabelVector, spec: &SplitSpec) -> Result<Vec<Vec<usize>>, DatasetError> {
    let k = spec.n_folds;
    if k < 2 {
        return Err(DatasetError::BadFoldCount(k));
    }
    let mut by_class = labels.indices_by_class();
    if by_class.iter().any(Vec::is_empty) {
        return Err(DatasetError::SingleClass);
    }
    if by_class[0].len() + by_class[1].len() < k {
        return Err(DatasetError::BadFoldCount(k));
    }
    let mut rng = rng::stream(spec.seed, Stream::Folds);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for class in [1usize, 0] {
        by_class[class].shuffle(&mut rng);
        for &i in &by_class[class] {
            folds[slot].push(i);
            slot = (slot + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Labeled/unlabeled partition of a label vector's indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

/// Per-class labeled counts for a stratified mask of `round(fraction * n)` rows.
///
/// The minority gets its proportional share of the labeled set, rounded to
/// nearest with exact halves rounded down, and at least one row when the
/// labeled set has room for both classes. The majority takes the rest.
fn stratified_quota(fraction: f64, counts: [usize; 2]) -> [usize; 2] {
    let n = counts[0] + counts[1];
    let total = ((fraction * n as f64).round() as usize).min(n);
    let minority = if counts[1] <= counts[0] { 1 } else { 0 };
    let majority = 1 - minority;
    let num = counts[minority] * total;
    let mut q_min = num / n;
    if 2 * (num % n) > n {
        q_min += 1;
    }
    if q_min == 0 && counts[minority] > 0 && total >= 2 {
        q_min = 1;
    }
    let mut q = [0usize; 2];
    q[majority] = (total - q_min).min(counts[majority]);
    q[minority] = total - q[majority];
    q
}

/// Stratified masking of observed labels: `round(fraction * n)` rows keep
/// their label, the rest (and every row that was already unknown) form the
/// unlabeled set.
///
/// Each class keeps its share of the labeled set to within one row; see
/// `stratified_quota` for the rounding.
pub fn label_mask_split(labels: &LabelVector, fraction: f64, seed: u64) -> Result<LabelMask, DatasetError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(DatasetError::BadFraction(fraction));
    }
    let mut by_class = labels.indices_by_class();
    if by_class[0].is_empty() || by_class[1].is_empty() {
        return Err(DatasetError::SingleClass);
    }
    let quota = stratified_quota(fraction, [by_class[0].len(), by_class[1].len()]);
    let mut rng = rng::stream(seed, Stream::LabelMask);
    let mut labeled = Vec::with_capacity(quota[0] + quota[1]);
    for class in [1usize, 0] {
        by_class[class].shuffle(&mut rng);
        labeled.extend_from_slice(&by_class[class][..quota[class]]);
    }
    labeled.sort_unstable();
    let in_labeled: HashSet<usize> = labeled.iter().copied().collect();
    let unlabeled = (0..labels.len()).filter(|i| !in_labeled.contains(i)).collect();
    Ok(LabelMask { labeled, unlabeled })
}

/// Labels with part of the truth hidden.
///
/// Training code sees [`MaskedLabels::observed`], in which masked rows are
/// [`Label::Unknown`]. The true labels of masked rows are only reachable
/// through [`MaskedLabels::reveal_for_evaluation`].
#[derive(Debug, Clone)]
pub struct MaskedLabels {
    observed: LabelVector,
    hidden: Vec<Label>,
}

impl MaskedLabels {
    pub fn new(truth: &LabelVector, mask: &LabelMask) -> Self {
        let mut observed = vec![Label::Unknown; truth.len()];
        for &i in &mask.labeled {
            observed[i] = truth.get(i);
        }
        Self {
            observed: LabelVector::new(observed),
            hidden: truth.values().to_vec(),
        }
    }

    pub fn observed(&self) -> &LabelVector {
        &self.observed
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        self.observed.observed_indices()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        self.observed.unknown_indices()
    }

    /// True labels, including the masked ones. Evaluation only.
    pub fn reveal_for_evaluation(&self) -> &[Label] {
        &self.hidden
    }
}

/// Stratified train/holdout split of a 0/1 label slice; returns
/// `(train, holdout)` index lists.
pub fn stratified_holdout(
    classes: &[u8],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    let labels = LabelVector::from_classes(classes);
    let mut by_class = labels.indices_by_class();
    if by_class[0].is_empty() || by_class[1].is_empty() {
        return Err(DatasetError::SingleClass);
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(DatasetError::BadFraction(holdout_fraction));
    }
    let mut rng = rng::stream(seed, Stream::Holdout);
    let mut train = Vec::new();
    let mut holdout = Vec::new();
    for class in [1usize, 0] {
        let members = &mut by_class[class];
        members.shuffle(&mut rng);
        // keep at least one member of each class on both sides when possible
        let mut h = (holdout_fraction * members.len() as f64).round() as usize;
        if members.len() >= 2 {
            h = h.clamp(1, members.len() - 1);
        }
        holdout.extend_from_slice(&members[..h]);
        train.extend_from_slice(&members[h..]);
    }
    train.sort_unstable();
    holdout.sort_unstable();
    Ok((train, holdout))
}
