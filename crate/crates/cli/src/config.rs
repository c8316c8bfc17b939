//! Declarative pipeline configuration (TOML) with command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub mining: MiningConfig,
    #[serde(default)]
    pub inference: InferenceConfig,
    #[serde(default)]
    pub repair: Option<RepairSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Version-control working directories to mine.
    #[serde(default)]
    pub repos: Vec<PathBuf>,
    /// Directories of `*.diff` / `*.patch` files.
    #[serde(default)]
    pub diff_dirs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningConfig {
    pub max_changed_lines: usize,
    pub max_hunks: usize,
    pub git_executable: String,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            max_changed_lines: 50,
            max_hunks: 3,
            git_executable: "git".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    /// Per-cluster wall-clock timeout.
    pub timeout_seconds: f64,
    pub jobs: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            timeout_seconds: 900.0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairSection {
    pub project: PathBuf,
    pub build_command: String,
    pub test_command: String,
    #[serde(default)]
    pub test_command_2: Option<String>,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_test_timeout")]
    pub per_test_timeout: f64,
    #[serde(default)]
    pub suspicious_files: Vec<PathBuf>,
    #[serde(default)]
    pub find_all: bool,
}

fn default_strategy() -> String {
    "hunk".into()
}

fn default_budget() -> usize {
    10_000
}

fn default_test_timeout() -> f64 {
    30.0
}

pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let config: PipelineConfig =
        toml::from_str(&text).with_context(|| format!("bad config {}", path.display()))?;
    for repo in &config.corpus.repos {
        if !repo.is_dir() {
            bail!("configured repository {} does not exist", repo.display());
        }
    }
    for dir in &config.corpus.diff_dirs {
        if !dir.is_dir() {
            bail!("configured diff directory {} does not exist", dir.display());
        }
    }
    if config.mining.max_changed_lines == 0 || config.mining.max_hunks == 0 {
        bail!("mining limits must be at least 1");
    }
    Ok(config)
}
