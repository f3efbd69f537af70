//! Optional TOML config file. Every key mirrors a command-line flag (with
//! underscores); flags win over file values, file values over defaults.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub palette: Option<PathBuf>,
    pub model_left: Option<PathBuf>,
    pub model_right: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub repetitions: Option<usize>,
    pub train_subjects: Option<usize>,
    pub classes: Option<usize>,
    pub per_class: Option<usize>,
    pub scale: Option<String>,
    pub arch: Option<String>,
    pub ltp_threshold: Option<f64>,
    pub butterworth_order: Option<u32>,
    pub butterworth_cutoff: Option<f64>,
    pub butterworth_high_boost: Option<f64>,
    pub butterworth_low_gain: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// `flag`, else `file`, else `default`.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// `flag`, else `file`, else an error naming the flag.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).with_context(|| format!("--{name} is required (flag or config file)"))
}
