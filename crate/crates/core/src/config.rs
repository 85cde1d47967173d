//! Run configuration, read from a TOML file.
//!
//! ```toml
//! seed = 0
//! output_dir = "out"
//!
//! [data]
//! source = "synthetic"          # or "csv"
//! label_column = "fraud"
//! [data.synthetic]
//! n = 10000
//! fraud_rate = 0.015
//!
//! [iforest]
//! n_trees = 100
//! alpha = 1.5
//!
//! [eval]
//! labeled_fraction_sweep = [0.05, 0.10, 0.20]
//! ```
//!
//! Every section and key is optional; missing values take the defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{load_csv, ColumnSchema, ColumnType, LabelVector, RawTable};
use crate::error::{ConfigError, Error};
use crate::eval::CvConfig;
use crate::iforest::{ForestParams, ThresholdConfig};
use crate::pipeline::{Method, PipelineConfig, SvmConfig};
use crate::preprocess::{ColumnRole, PreprocessConfig, Role};
use crate::selftrain::SelfTrainConfig;
use crate::synthetic::{generate, SyntheticSpec, LABEL_COLUMN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// CSV path, relative to the config file's directory.
    pub path: Option<PathBuf>,
    pub label_column: String,
    /// CSV schema in header order, label column included.
    pub columns: Vec<ColumnSchema>,
    pub synthetic: SyntheticSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            path: None,
            label_column: LABEL_COLUMN.into(),
            columns: Vec::new(),
            synthetic: SyntheticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IforestConfig {
    pub n_trees: usize,
    pub subsample_size: usize,
    pub alpha: f64,
    pub contamination: f64,
    pub contamination_floor: bool,
}

impl Default for IforestConfig {
    fn default() -> Self {
        let f = ForestParams::default();
        let t = ThresholdConfig::default();
        Self {
            n_trees: f.n_trees,
            subsample_size: f.subsample_size,
            alpha: t.alpha,
            contamination: t.contamination,
            contamination_floor: t.contamination_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_folds: usize,
    /// Fraction kept labeled by `train`.
    pub labeled_fraction: f64,
    /// Fractions evaluated by `evaluate`, one report each.
    pub labeled_fraction_sweep: Vec<f64>,
    pub methods: Vec<Method>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            labeled_fraction: 0.10,
            labeled_fraction_sweep: vec![0.05, 0.10, 0.20],
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub preprocess: PreprocessConfig,
    pub iforest: IforestConfig,
    pub svm: SvmConfig,
    pub selftrain: SelfTrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            preprocess: PreprocessConfig::default(),
            iforest: IforestConfig::default(),
            svm: SvmConfig::default(),
            selftrain: SelfTrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Hex SHA-256 of the raw config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Features and labels of a loaded dataset.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub features: RawTable,
    pub labels: LabelVector,
    /// Full input schema, label column included.
    pub schema: Vec<ColumnSchema>,
    /// Source file, when the data came from disk.
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `path`, returning the config with the hash of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| ConfigError::Invalid(format!("not UTF-8: {e}")))?;
        Ok((Self::from_toml(&text)?, config_hash(&bytes)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.data.source == DataSource::Csv {
            if self.data.path.is_none() {
                return bad("data.source = \"csv\" needs data.path");
            }
            if self.data.columns.is_empty() {
                return bad("data.source = \"csv\" needs data.columns");
            }
            if !self.data.columns.iter().any(|c| c.name == self.data.label_column) {
                return bad("data.label_column is not among data.columns");
            }
        }
        if self.eval.methods.is_empty() {
            return bad("eval.methods is empty");
        }
        if self.eval.labeled_fraction_sweep.is_empty() {
            return bad("eval.labeled_fraction_sweep is empty");
        }
        self.pipeline_config()
            .threshold
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.selftrain.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            forest: ForestParams {
                n_trees: self.iforest.n_trees,
                subsample_size: self.iforest.subsample_size,
            },
            threshold: ThresholdConfig {
                alpha: self.iforest.alpha,
                contamination: self.iforest.contamination,
                contamination_floor: self.iforest.contamination_floor,
            },
            svm: self.svm.clone(),
            selftrain: self.selftrain,
        }
    }

    pub fn cv_config(&self, labeled_fraction: f64) -> CvConfig {
        CvConfig {
            n_folds: self.eval.n_folds,
            labeled_fraction,
            methods: self.eval.methods.clone(),
            seed: self.seed,
        }
    }

    /// Input schema, label column included.
    pub fn input_schema(&self) -> Vec<ColumnSchema> {
        match self.data.source {
            DataSource::Csv => self.data.columns.clone(),
            DataSource::Synthetic => self.data.synthetic.schema(),
        }
    }

    /// Loads or generates the dataset; relative CSV paths resolve against
    /// `base_dir`.
    pub fn load_data(&self, base_dir: &Path) -> Result<LoadedData, Error> {
        let schema = self.input_schema();
        let (table, path) = match self.data.source {
            DataSource::Csv => {
                let p = base_dir.join(self.data.path.as_ref().expect("validated"));
                (load_csv(&p, &schema)?, Some(p))
            }
            DataSource::Synthetic => {
                let data = generate(&self.data.synthetic, self.seed)?;
                let mut table = data.feature_table();
                let mut names = table.column_names().to_vec();
                let mut cols = table.columns().to_vec();
                names.push(LABEL_COLUMN.into());
                cols.push(crate::dataset::Column::Numeric(data.y.iter().map(|&v| Some(v as f64)).collect()));
                table = RawTable::new(names, cols)?;
                (table, None)
            }
        };
        let (features, label_col) = table.split_column(&self.data.label_column)?;
        let labels = LabelVector::from_column(&self.data.label_column, &label_col)?;
        Ok(LoadedData {
            features,
            labels,
            schema,
            path,
        })
    }

    /// The preprocess section, with default roles filled in for feature
    /// columns it does not mention: numeric columns are scaled, categorical
    /// ones encoded by cardinality, dates forward-filled.
    pub fn preprocess_for(&self, features: &RawTable) -> PreprocessConfig {
        let mut cfg = self.preprocess.clone();
        for s in features.schema() {
            if cfg.role_of(&s.name).is_none() {
                let role = match s.kind {
                    ColumnType::Numeric => Role::Numeric,
                    ColumnType::Categorical => Role::Categorical,
                    ColumnType::Date => Role::DateSequential,
                };
                cfg.columns.push(ColumnRole { name: s.name, role });
            }
        }
        cfg
    }

    /// Effective configuration as TOML, for run logs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
