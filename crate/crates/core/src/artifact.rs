//! Single-file model artifact.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic    8 bytes  "SCFRAUD\0"
//! version  u32
//! header   u32 length + JSON metadata
//! sections u64 length + bincode payload, in the order the header lists
//! ```
//!
//! The version is checked before the header or any section is decoded.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::ColumnSchema;
use crate::error::{ArtifactError, Error};
use crate::iforest::{IsolationForestModel, ThresholdConfig};
use crate::pipeline::TwoPhaseModel;
use crate::preprocess::PreprocessModel;
use crate::svm::SvmModel;

pub const MAGIC: &[u8; 8] = b"SCFRAUD\0";
pub const FORMAT_VERSION: u32 = 1;

const SECTIONS: [&str; 4] = ["preprocess", "iforest", "svm", "threshold"];

/// Upper bound on a single length prefix; anything larger is treated as
/// corruption rather than allocated.
const MAX_SECTION: u64 = 1 << 34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub format_version: u32,
    pub seed: u64,
    pub config_hash: String,
    /// Modification time of the training data (RFC 3339), when it came from a file.
    pub data_modified: Option<String>,
    pub label_column: String,
    /// Training input schema, label column included.
    pub input_schema: Vec<ColumnSchema>,
    pub sections: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ThresholdSection {
    config: ThresholdConfig,
    tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub meta: ArtifactMeta,
    pub preprocess: PreprocessModel,
    pub model: TwoPhaseModel,
}

fn corrupt(e: impl std::fmt::Display) -> ArtifactError {
    ArtifactError::Corrupt(e.to_string())
}

fn read_exact<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>, ArtifactError> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => corrupt("unexpected end of file"),
        _ => ArtifactError::Io(e),
    })?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ArtifactError> {
    Ok(u32::from_le_bytes(read_exact(r, 4)?.try_into().expect("4 bytes")))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, ArtifactError> {
    Ok(u64::from_le_bytes(read_exact(r, 8)?.try_into().expect("8 bytes")))
}

fn read_section<R: Read, T: for<'de> Deserialize<'de>>(r: &mut R, name: &str) -> Result<T, ArtifactError> {
    let len = read_u64(r)?;
    if len > MAX_SECTION {
        return Err(corrupt(format!("section `{name}` claims {len} bytes")));
    }
    let bytes = read_exact(r, len as usize)?;
    bincode::deserialize(&bytes).map_err(|e| corrupt(format!("section `{name}`: {e}")))
}

fn write_section<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<(), ArtifactError> {
    let bytes = bincode::serialize(value).map_err(corrupt)?;
    w.write_all(&(bytes.len() as u64).to_le_bytes())?;
    w.write_all(&bytes)?;
    Ok(())
}

impl ModelArtifact {
    pub fn new(
        seed: u64,
        config_hash: String,
        data_modified: Option<String>,
        label_column: String,
        input_schema: Vec<ColumnSchema>,
        preprocess: PreprocessModel,
        model: TwoPhaseModel,
    ) -> Self {
        Self {
            meta: ArtifactMeta {
                format_version: FORMAT_VERSION,
                seed,
                config_hash,
                data_modified,
                label_column,
                input_schema,
                sections: SECTIONS.iter().map(|s| s.to_string()).collect(),
            },
            preprocess,
            model,
        }
    }

    pub fn forest(&self) -> &IsolationForestModel {
        &self.model.forest
    }

    pub fn svm(&self) -> &SvmModel {
        &self.model.svm
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), ArtifactError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let header = serde_json::to_vec_pretty(&self.meta).map_err(corrupt)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        write_section(&mut w, &self.preprocess)?;
        write_section(&mut w, &self.model.forest)?;
        write_section(&mut w, &self.model.svm)?;
        write_section(
            &mut w,
            &ThresholdSection {
                config: self.model.threshold,
                tau: self.model.tau,
            },
        )?;
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self, ArtifactError> {
        let magic = read_exact(&mut r, MAGIC.len()).map_err(|_| ArtifactError::BadMagic)?;
        if magic != MAGIC {
            return Err(ArtifactError::BadMagic);
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(ArtifactError::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let header_len = read_u32(&mut r)? as usize;
        let meta: ArtifactMeta =
            serde_json::from_slice(&read_exact(&mut r, header_len)?).map_err(|e| corrupt(format!("header: {e}")))?;
        if meta.format_version != version {
            return Err(corrupt("header version disagrees with the file version"));
        }
        if meta.sections != SECTIONS {
            return Err(corrupt(format!("unexpected sections {:?}", meta.sections)));
        }
        let preprocess = read_section(&mut r, "preprocess")?;
        let forest = read_section(&mut r, "iforest")?;
        let svm = read_section(&mut r, "svm")?;
        let t: ThresholdSection = read_section(&mut r, "threshold")?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(corrupt("trailing bytes after the last section"));
        }
        Ok(Self {
            meta,
            preprocess,
            model: TwoPhaseModel {
                forest,
                threshold: t.config,
                tau: t.tau,
                svm,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::read(&bytes[..])?)
    }

    /// Checks the stored config hash against `computed`.
    pub fn verify_config_hash(&self, computed: &str) -> Result<(), ArtifactError> {
        if self.meta.config_hash != computed {
            return Err(ArtifactError::ConfigHash {
                stored: self.meta.config_hash.clone(),
                computed: computed.to_string(),
            });
        }
        Ok(())
    }
}
