//! Loading and preprocessing shared by every command, so that both
//! pipelines always see the same trials.

use eeg_coreset::signal::generate_synthetic;
use eeg_coreset::{bandpass, reject_artifacts, ClassLabel, Rejection, TrialManifest, TrialRecording};
use log::{info, warn};

use crate::config::{InputSource, RunConfig};
use crate::error::{BenchError, BenchResult};

#[derive(Debug, Clone)]
pub struct Prepared {
    pub trials: Vec<TrialRecording>,
    pub rejected: Vec<Rejection>,
    pub sample_rate_hz: f64,
    pub channels: usize,
}

impl Prepared {
    pub fn count(&self, label: ClassLabel) -> usize {
        self.trials.iter().filter(|t| t.label == label).count()
    }
}

pub fn load_raw(cfg: &RunConfig) -> BenchResult<Vec<TrialRecording>> {
    match &cfg.input {
        InputSource::Manifest(path) => {
            let manifest = TrialManifest::load(path)?;
            let base = path.parent().unwrap_or(std::path::Path::new("."));
            Ok(manifest.load_trials(base)?)
        }
        InputSource::Synthetic(_) => {
            let spec = cfg.synthetic_spec().expect("synthetic input");
            Ok(generate_synthetic(&spec)?)
        }
    }
}

/// Load, band-pass and screen the configured input.
pub fn prepare(cfg: &RunConfig) -> BenchResult<Prepared> {
    cfg.validate()?;
    let raw = load_raw(cfg)?;
    let Some(first) = raw.first() else {
        return Err(BenchError::Data("input contains no trials".into()));
    };
    let sample_rate_hz = first.sample_rate_hz;
    let channels = first.channels();
    if let Some(bad) = raw.iter().find(|t| t.channels() != channels) {
        return Err(BenchError::Data(format!(
            "trial {} has {} channels, expected {channels}",
            bad.trial_id,
            bad.channels()
        )));
    }
    if raw.iter().any(|t| t.sample_rate_hz != sample_rate_hz) {
        return Err(BenchError::Data("trials do not share one sample rate".into()));
    }

    let filtered = match &cfg.filter {
        Some(f) => {
            let spec = f.at_rate(sample_rate_hz);
            spec.validate().map_err(|e| BenchError::Config(e.to_string()))?;
            info!(
                "band-pass {}-{} Hz, order {}, {:?}",
                spec.low_cut_hz, spec.high_cut_hz, spec.order, spec.mode
            );
            raw.iter().map(|t| bandpass(t, &spec)).collect::<Result<Vec<_>, _>>()?
        }
        None => raw,
    };

    let (trials, rejected) = match &cfg.artifact_policy {
        Some(policy) => reject_artifacts(&filtered, policy)?,
        None => (filtered, Vec::new()),
    };
    for r in &rejected {
        warn!("rejected trial {} ({})", r.trial_id, r.reason);
    }
    if trials.is_empty() {
        return Err(BenchError::Data("every trial was rejected".into()));
    }
    Ok(Prepared {
        trials,
        rejected,
        sample_rate_hz,
        channels,
    })
}

/// Replay order for streaming commands: trials alternate between the two
/// classes (first class-1 trial, first class-2 trial, ...), each trial
/// contributing its samples in time order. Leftover trials of the larger
/// class follow at the end.
pub fn replay_order(trials: &[TrialRecording]) -> Vec<usize> {
    let by_class: Vec<Vec<usize>> = ClassLabel::BOTH
        .iter()
        .map(|&label| (0..trials.len()).filter(|&i| trials[i].label == label).collect())
        .collect();
    let longest = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut order = Vec::with_capacity(trials.len());
    for k in 0..longest {
        for class in &by_class {
            if let Some(&i) = class.get(k) {
                order.push(i);
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn trial(label: ClassLabel, id: &str) -> TrialRecording {
        TrialRecording::new(DMatrix::from_element(1, 2, 1.0), 100.0, label, "s", id).unwrap()
    }

    #[test]
    fn replay_alternates_classes() {
        let trials = vec![
            trial(ClassLabel::One, "a"),
            trial(ClassLabel::One, "b"),
            trial(ClassLabel::One, "c"),
            trial(ClassLabel::Two, "x"),
            trial(ClassLabel::Two, "y"),
        ];
        assert_eq!(replay_order(&trials), vec![0, 3, 1, 4, 2]);
    }
}
