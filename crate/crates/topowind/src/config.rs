//! Run configuration: one TOML document with sections for data generation,
//! autoencoder training, probe training, and artifact paths. Parsing is
//! strict, so a misspelled key fails instead of silently falling back to a
//! default. Command-line overrides (`--set section.key=value`) win over
//! file values; every command prints the fully resolved document it ran
//! with.

use crate::ae::AeTrainConfig;
use crate::probe::ProbeTrainConfig;
use crate::windgen::GenParams;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad override {0:?}: expected section.key=value")]
    BadOverride(String),
    #[error("config value error: {0}")]
    Value(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub l: usize,
    pub max_segments: usize,
    pub samples_per_pattern: usize,
    pub noise_amplitude: f64,
    pub length_jitter: f64,
    pub seed: u64,
}

impl Default for DataSection {
    fn default() -> Self {
        let p = GenParams::default();
        DataSection {
            l: p.l,
            max_segments: p.max_segments,
            samples_per_pattern: p.samples_per_pattern,
            noise_amplitude: p.noise_amplitude,
            length_jitter: p.length_jitter,
            seed: p.seed,
        }
    }
}

impl DataSection {
    pub fn gen_params(&self) -> GenParams {
        GenParams {
            l: self.l,
            max_segments: self.max_segments,
            samples_per_pattern: self.samples_per_pattern,
            noise_amplitude: self.noise_amplitude,
            length_jitter: self.length_jitter,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeSection {
    pub c1: usize,
    pub hidden: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for AeSection {
    fn default() -> Self {
        let c = AeTrainConfig::default();
        AeSection {
            c1: c.c1,
            hidden: c.hidden,
            lr: c.lr,
            batch: c.batch,
            epochs: c.epochs,
            eval_every: c.eval_every,
            seed: c.seed,
        }
    }
}

impl AeSection {
    pub fn train_config(&self) -> AeTrainConfig {
        AeTrainConfig {
            c1: self.c1,
            hidden: self.hidden,
            lr: self.lr,
            batch: self.batch,
            epochs: self.epochs,
            eval_every: self.eval_every,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub hidden: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub filters_used: usize,
    pub seed: u64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let c = ProbeTrainConfig::default();
        ProbeSection {
            hidden: c.hidden,
            lr: c.lr,
            batch: c.batch,
            epochs: c.epochs,
            filters_used: c.filters_used,
            seed: c.seed,
        }
    }
}

impl ProbeSection {
    pub fn train_config(&self) -> ProbeTrainConfig {
        ProbeTrainConfig {
            hidden: self.hidden,
            lr: self.lr,
            batch: self.batch,
            epochs: self.epochs,
            filters_used: self.filters_used,
            seed: self.seed,
        }
    }
}

/// Artifact file names, resolved relative to `out_dir` unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub out_dir: String,
    pub train_data: String,
    pub test_data: String,
    pub ae_final: String,
    pub ae_best: String,
    pub loss_log: String,
    pub train_features: String,
    pub test_features: String,
    pub probe: String,
    pub fig3: String,
    pub fig5: String,
    pub fig7: String,
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection {
            out_dir: "out".into(),
            train_data: "train.ndjson".into(),
            test_data: "test.ndjson".into(),
            ae_final: "ae_final.json".into(),
            ae_best: "ae_best.json".into(),
            loss_log: "loss_log.ndjson".into(),
            train_features: "train_features.ndjson".into(),
            test_features: "test_features.ndjson".into(),
            probe: "probe.json".into(),
            fig3: "fig3_features.csv".into(),
            fig5: "fig5_ranks.csv".into(),
            fig7: "fig7_loss.csv".into(),
        }
    }
}

impl IoSection {
    pub fn resolve(&self, name: &str) -> PathBuf {
        let p = Path::new(name);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            Path::new(&self.out_dir).join(p)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub ae: AeSection,
    pub probe: ProbeSection,
    pub io: IoSection,
}

impl RunConfig {
    /// Loads a config document, layering `--set` overrides on top. With no
    /// file, overrides apply to the built-in defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?,
            None => String::new(),
        };
        let mut table: toml::Table = toml::from_str(&text)?;
        for entry in overrides {
            apply_override(&mut table, entry)?;
        }
        // Strictness lives in the typed deserialize: unknown keys anywhere
        // in the merged table are rejected.
        let cfg = RunConfig::deserialize(toml::Value::Table(table))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.data
            .gen_params()
            .validate()
            .map_err(|e| ConfigError::Value(e.to_string()))?;
        if self.ae.batch == 0 || self.ae.eval_every == 0 {
            return Err(ConfigError::Value(
                "ae.batch and ae.eval_every must be >= 1".into(),
            ));
        }
        if self.probe.batch == 0 {
            return Err(ConfigError::Value("probe.batch must be >= 1".into()));
        }
        if self.probe.filters_used == 0 || self.probe.filters_used > 4 {
            return Err(ConfigError::Value(format!(
                "probe.filters_used must be in 1..=4, got {}",
                self.probe.filters_used
            )));
        }
        Ok(())
    }

    /// The resolved document, every field explicit.
    pub fn render(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Applies one `section.key=value` override. Values parse as TOML scalars;
/// anything that does not parse is taken as a string.
fn apply_override(table: &mut toml::Table, entry: &str) -> Result<(), ConfigError> {
    let (path, raw) = entry
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(entry.to_string()))?;
    let mut keys: Vec<&str> = path.split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) || keys.is_empty() {
        return Err(ConfigError::BadOverride(entry.to_string()));
    }
    let value = parse_scalar(raw.trim());
    let last = keys.pop().expect("nonempty");
    let mut node = table;
    for k in keys {
        node = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::BadOverride(entry.to_string()))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn parse_scalar(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("parsed override has v"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
