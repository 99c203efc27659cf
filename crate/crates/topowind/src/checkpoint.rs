//! Model checkpoints: a JSON document holding integer architecture
//! hyperparameters, training metadata, and per-layer parameter arrays
//! encoded as base64 of little-endian f64 bytes.
//!
//! Base64 keeps every parameter bit-exact (JSON decimal printing would too,
//! but at 3x the size and parse cost), so save → load reproduces forward
//! outputs bitwise, which reproducibility tests rely on.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

/// Bumped on any incompatible change to the on-disk layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (this build reads {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint is for model {found:?}, expected {expected:?}")]
    WrongModel { expected: String, found: String },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Training provenance stored alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs_completed: usize,
}

/// One named parameter array with its declared shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: String,
}

impl ParamBlock {
    pub fn from_values(name: &str, shape: Vec<usize>, values: &[f64]) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), values.len());
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        ParamBlock { name: name.to_string(), shape, data: B64.encode(bytes) }
    }

    pub fn values(&self) -> Result<Vec<f64>, CheckpointError> {
        let bytes = B64
            .decode(&self.data)
            .map_err(|e| CheckpointError::Corrupt(format!("block {}: {e}", self.name)))?;
        if bytes.len() % 8 != 0 {
            return Err(CheckpointError::Corrupt(format!(
                "block {}: {} bytes is not a whole number of f64",
                self.name,
                bytes.len()
            )));
        }
        let n: usize = self.shape.iter().product();
        if bytes.len() / 8 != n {
            return Err(CheckpointError::Corrupt(format!(
                "block {}: shape {:?} wants {n} values, data holds {}",
                self.name,
                self.shape,
                bytes.len() / 8
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// On-disk checkpoint document, shared by the autoencoder and the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: String,
    /// Integer hyperparameters; BTreeMap keeps key order (and file bytes)
    /// stable.
    pub architecture: BTreeMap<String, i64>,
    pub metadata: TrainMeta,
    pub params: Vec<ParamBlock>,
}

impl Checkpoint {
    pub fn new(
        model: &str,
        architecture: BTreeMap<String, i64>,
        metadata: TrainMeta,
        params: Vec<ParamBlock>,
    ) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            model: model.to_string(),
            architecture,
            metadata,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path)?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format_version != FORMAT_VERSION {
            return Err(CheckpointError::Version { found: ck.format_version });
        }
        Ok(ck)
    }

    pub fn expect_model(&self, expected: &str) -> Result<(), CheckpointError> {
        if self.model != expected {
            return Err(CheckpointError::WrongModel {
                expected: expected.to_string(),
                found: self.model.clone(),
            });
        }
        Ok(())
    }

    pub fn arch(&self, key: &str) -> Result<i64, CheckpointError> {
        self.architecture
            .get(key)
            .copied()
            .ok_or_else(|| CheckpointError::Corrupt(format!("missing architecture key {key:?}")))
    }

    pub fn block(&self, name: &str) -> Result<&ParamBlock, CheckpointError> {
        self.params
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| CheckpointError::Corrupt(format!("missing parameter block {name:?}")))
    }
}
