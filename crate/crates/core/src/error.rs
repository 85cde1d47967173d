//! Error types, one enum per module plus a crate-level wrapper that keeps
//! the originating module visible in the message.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header does not match schema: expected column `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("header is missing schema column `{0}`")]
    MissingColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{raw}` as {kind}")]
    UnparseableCell {
        row: usize,
        column: String,
        raw: String,
        kind: &'static str,
    },
    #[error("column `{column}` has {len} values but the table has {rows} rows")]
    RaggedColumn {
        column: String,
        len: usize,
        rows: usize,
    },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("label column `{column}` row {row}: `{raw}` is not 0, 1 or empty")]
    BadLabel {
        column: String,
        row: usize,
        raw: String,
    },
    #[error("class {class} has {count} members, fewer than the {needed} required")]
    TooFewPerClass {
        class: u8,
        count: usize,
        needed: usize,
    },
    #[error("labeled fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("cannot make {0} folds: need at least 2 folds and no more folds than rows")]
    BadFoldCount(usize),
    #[error("both classes must be present among observed labels")]
    SingleClass,
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
}

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("column `{0}` has no role in the preprocessing config")]
    MissingRole(String),
    #[error("role configured for unknown column `{0}`")]
    UnknownRoleColumn(String),
    #[error("column `{column}`: role `{role}` does not fit column type `{kind}`")]
    RoleTypeMismatch {
        column: String,
        role: &'static str,
        kind: &'static str,
    },
    #[error("threshold `{name}` = {value} is outside (0, 1]")]
    BadThreshold { name: &'static str, value: f64 },
    #[error("one-hot column `{column}` has {cardinality} categories, above the limit of {max}")]
    CardinalityTooHigh {
        column: String,
        cardinality: usize,
        max: usize,
    },
    #[error("column `{0}` is entirely missing and has no group fallback")]
    AllMissing(String),
    #[error("target encoding of `{0}` needs at least one observed label")]
    NoObservedLabels(String),
    #[error("group-by column `{0}` must be categorical")]
    BadGroupColumn(String),
    #[error("table schema does not match the fitted schema: {0}")]
    SchemaMismatch(String),
    #[error("label vector has {labels} entries but the table has {rows} rows")]
    LabelLength { labels: usize, rows: usize },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("empty table")]
    EmptyTable,
}

#[derive(Debug, Error)]
pub enum IforestError {
    #[error("isolation forest needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("subsample size must be at least 2, got {0}")]
    BadSubsample(usize),
    #[error("need at least one tree")]
    NoTrees,
    #[error("feature vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("adaptive threshold needs at least 2 scores, got {0}")]
    TooFewScores(usize),
    #[error("empty score vector")]
    EmptyScores,
    #[error("invalid threshold config: {0}")]
    BadThresholdConfig(String),
}

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data is empty")]
    Empty,
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("feature vector has dimension {got}, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid kernel parameters: {0}")]
    BadParams(String),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("grid search: {0}")]
    Grid(#[from] DatasetError),
    #[error("empty parameter grid")]
    EmptyGrid,
}

#[derive(Debug, Error)]
pub enum SelfTrainError {
    #[error("empty decision-value vector")]
    EmptyInput,
    #[error("labeled data must contain both classes")]
    SingleClass,
    #[error("invalid self-training config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error("metric needs both classes present")]
    SingleClass,
    #[error("metric needs at least one positive")]
    NoPositives,
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("no methods configured")]
    NoMethods,
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("not a model artifact (bad magic)")]
    BadMagic,
    #[error("artifact format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("artifact truncated or corrupt: {0}")]
    Corrupt(String),
    #[error("config hash mismatch: artifact has {stored}, config file hashes to {computed}")]
    ConfigHash { stored: String, computed: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("preprocess: {0}")]
    Preprocess(#[from] PreprocessError),
    #[error("iforest: {0}")]
    Iforest(#[from] IforestError),
    #[error("svm: {0}")]
    Svm(#[from] SvmError),
    #[error("selftrain: {0}")]
    SelfTrain(#[from] SelfTrainError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("artifact: {0}")]
    Artifact(#[from] ArtifactError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
