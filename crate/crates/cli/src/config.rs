//! Run configuration file: TOML with `[data]`, `[model]` and `[train]`
//! tables. Unknown keys are errors.

use std::path::{Path, PathBuf};

use anyhow::Context;
use hyperfuse::signals::Target;
use hyperfuse::training::TrainConfig;
use hyperfuse::ModelConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// Raw dataset root (input of `preprocess`).
    pub raw: Option<PathBuf>,
    /// Processed dataset root (output of `preprocess`, input of training).
    pub processed: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub target: Option<Target>,
    pub data: DataPaths,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

/// Rejected configuration file.
#[derive(Debug, thiserror::Error)]
#[error("config {path}: {msg}")]
pub struct ConfigError {
    pub path: PathBuf,
    pub msg: String,
}

impl RunConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let err = |msg: String| ConfigError {
            path: path.to_path_buf(),
            msg,
        };
        let cfg: Self = toml::from_str(text).map_err(|e| err(e.message().to_string()))?;
        cfg.model.validate().map_err(|e| err(e.to_string()))?;
        cfg.train.validate().map_err(|e| err(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads and validates `path`; relative data paths are taken relative
    /// to the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data.raw, &mut cfg.data.processed].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
