use super::{ModelConfig, Side};
use crate::encoder::EncoderConfig;
use crate::nn::OptimizerConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Everything needed to rebuild and use a checkpoint, stored as JSON next
/// to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub side: Side,
    pub model: ModelConfig,
    pub encoder: EncoderConfig,
    pub optimizer: OptimizerConfig,
    /// SHA-256 of the palette file the descriptors were colourized with.
    pub palette_sha256: String,
    pub seed: u64,
    /// Subject id for each output class, in class order.
    pub class_ids: Vec<String>,
}

impl ModelManifest {
    /// `model.ckpt` → `model.ckpt.json`.
    pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
        let mut s = checkpoint.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.class_ids.len() != m.model.classes {
            return Err(Error::Format(format!(
                "{}: {} class ids for {} classes",
                path.display(),
                m.class_ids.len(),
                m.model.classes
            )));
        }
        Ok(m)
    }
}
