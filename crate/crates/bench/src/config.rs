//! Run configuration, loaded from JSON and patched by CLI flags.

use std::path::{Path, PathBuf};

use eeg_coreset::{ArtifactPolicy, FilterMode, FilterSpec, SyntheticSpec};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, BenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Coreset,
    Batch,
    #[default]
    Both,
}

impl Pipeline {
    pub fn runs_coreset(self) -> bool {
        matches!(self, Pipeline::Coreset | Pipeline::Both)
    }

    pub fn runs_batch(self) -> bool {
        matches!(self, Pipeline::Batch | Pipeline::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    /// Path to a manifest JSON; entry paths resolve against its directory.
    Manifest(PathBuf),
    Synthetic(SyntheticSpec),
}

/// Band-pass settings; the sample rate comes from the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
    pub mode: FilterMode,
}

impl FilterConfig {
    pub fn at_rate(&self, sample_rate_hz: f64) -> FilterSpec {
        FilterSpec {
            low_cut_hz: self.low_cut_hz,
            high_cut_hz: self.high_cut_hz,
            order: self.order,
            sample_rate_hz,
            mode: self.mode,
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        let s = FilterSpec::delta_theta(160.0);
        FilterConfig {
            low_cut_hz: s.low_cut_hz,
            high_cut_hz: s.high_cut_hz,
            order: s.order,
            mode: s.mode,
        }
    }
}

fn default_m() -> usize {
    2
}

fn default_one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_flop_budget() -> f64 {
    2e11
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSource,
    /// `null` skips band-pass filtering.
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    /// `null` skips artifact screening.
    #[serde(default)]
    pub artifact_policy: Option<ArtifactPolicy>,
    #[serde(default = "default_m")]
    pub m_components: usize,
    #[serde(default)]
    pub ridge: f64,
    #[serde(default)]
    pub lda_shrinkage: f64,
    #[serde(default)]
    pub window_length: Option<u64>,
    #[serde(default = "default_one")]
    pub machines: usize,
    /// Overrides the synthetic spec's seed when set.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub pipeline: Pipeline,
    /// Emit a stream-bench row every `stride` samples.
    #[serde(default = "default_one")]
    pub stride: usize,
    /// Upper bound on multiply-adds spent by the batch oracle in one
    /// stream-bench run; the stride grows until the estimate fits.
    #[serde(default = "default_flop_budget")]
    pub batch_flop_budget: f64,
    /// Stop the stream replay after this many samples.
    #[serde(default)]
    pub max_samples: Option<usize>,
}

impl RunConfig {
    pub fn new(input: InputSource) -> Self {
        RunConfig {
            input,
            filter: None,
            artifact_policy: None,
            m_components: default_m(),
            ridge: 0.0,
            lda_shrinkage: 0.0,
            window_length: None,
            machines: 1,
            seed: None,
            output_dir: default_output(),
            pipeline: Pipeline::Both,
            stride: 1,
            batch_flop_budget: default_flop_budget(),
            max_samples: None,
        }
    }

    /// Parse a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> BenchResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let InputSource::Manifest(p) = &mut cfg.input {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> BenchResult<()> {
        if self.machines == 0 {
            return Err(BenchError::Config("machines must be at least 1".into()));
        }
        if self.m_components == 0 {
            return Err(BenchError::Config("m_components must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(BenchError::Config("stride must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(BenchError::Config(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        if !(0.0..=1.0).contains(&self.lda_shrinkage) {
            return Err(BenchError::Config(format!(
                "lda_shrinkage must be in [0, 1], got {}",
                self.lda_shrinkage
            )));
        }
        if !(self.batch_flop_budget > 0.0) {
            return Err(BenchError::Config("batch_flop_budget must be positive".into()));
        }
        if self.window_length == Some(0) {
            return Err(BenchError::Config("window_length must be positive".into()));
        }
        if let Some(policy) = &self.artifact_policy {
            policy.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        }
        match &self.input {
            InputSource::Manifest(p) if !p.is_file() => Err(BenchError::Config(format!(
                "manifest {} does not exist",
                p.display()
            ))),
            InputSource::Manifest(_) => Ok(()),
            InputSource::Synthetic(spec) => spec.validate().map_err(|e| BenchError::Config(e.to_string())),
        }
    }

    /// The synthetic spec with the config-level seed applied.
    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match &self.input {
            InputSource::Synthetic(spec) => {
                let mut spec = spec.clone();
                if let Some(seed) = self.seed {
                    spec.seed = seed;
                }
                Some(spec)
            }
            InputSource::Manifest(_) => None,
        }
    }
}
