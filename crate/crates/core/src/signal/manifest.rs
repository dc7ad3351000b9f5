use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_trial_csv, ClassLabel, TrialRecording};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: ClassLabel,
    pub subject_id: String,
}

/// List of trial CSV files sharing one sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialManifest {
    pub sample_rate_hz: f64,
    pub entries: Vec<ManifestEntry>,
}

impl TrialManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: TrialManifest = serde_json::from_str(&text)?;
        if !(manifest.sample_rate_hz.is_finite() && manifest.sample_rate_hz > 0.0) {
            return Err(Error::Spec(format!(
                "manifest sample_rate_hz must be positive, got {}",
                manifest.sample_rate_hz
            )));
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Fails unless both classes have at least one entry.
    pub fn check_trainable(&self) -> Result<()> {
        for label in ClassLabel::BOTH {
            if !self.entries.iter().any(|e| e.label == label) {
                return Err(Error::InsufficientData(format!(
                    "manifest has no entries for class {label}"
                )));
            }
        }
        Ok(())
    }

    /// Read every entry. Relative paths are resolved against `base_dir`
    /// (normally the directory holding the manifest).
    pub fn load_trials(&self, base_dir: impl AsRef<Path>) -> Result<Vec<TrialRecording>> {
        let base = base_dir.as_ref();
        self.entries
            .iter()
            .map(|entry| {
                let path = if entry.path.is_absolute() {
                    entry.path.clone()
                } else {
                    base.join(&entry.path)
                };
                let mut trial = read_trial_csv(&path, entry.label, self.sample_rate_hz)?;
                trial.subject_id = entry.subject_id.clone();
                Ok(trial)
            })
            .collect()
    }
}
