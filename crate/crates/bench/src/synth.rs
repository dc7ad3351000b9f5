//! `synth`: write synthetic trials to disk as CSV files plus a manifest.

use std::path::Path;

use eeg_coreset::signal::{generate_synthetic, write_trial_csv, ManifestEntry};
use eeg_coreset::{SyntheticSpec, TrialManifest};

use crate::error::{BenchError, BenchResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_DIR: &str = "trials";

/// Materialise `spec` under `out_dir`. Manifest paths are relative to
/// `out_dir`.
pub fn cmd_synth(spec: &SyntheticSpec, out_dir: &Path) -> BenchResult<TrialManifest> {
    spec.validate().map_err(|e| BenchError::Config(e.to_string()))?;
    let trials = generate_synthetic(spec)?;
    let dir = out_dir.join(TRIALS_DIR);
    std::fs::create_dir_all(&dir).map_err(|e| BenchError::output(&dir, e))?;
    let mut entries = Vec::with_capacity(trials.len());
    for t in &trials {
        let rel = Path::new(TRIALS_DIR).join(format!("{}.csv", t.trial_id));
        write_trial_csv(t, out_dir.join(&rel))?;
        entries.push(ManifestEntry {
            path: rel,
            label: t.label,
            subject_id: t.subject_id.clone(),
        });
    }
    let manifest = TrialManifest {
        sample_rate_hz: spec.sample_rate_hz,
        entries,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
