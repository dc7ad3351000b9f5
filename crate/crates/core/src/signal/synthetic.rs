//! Stationary Gaussian two-class data with distinct spatial covariances.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ClassLabel, TrialRecording};
use crate::{Error, Result};

fn default_rate() -> f64 {
    160.0
}

fn default_subject() -> String {
    "synthetic".to_string()
}

/// Recipe for a deterministic synthetic dataset.
///
/// `class_covariances` are given as nested row arrays in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub channels: usize,
    pub samples_per_trial: usize,
    pub trials_per_class: usize,
    pub class_covariances: [Vec<Vec<f64>>; 2],
    pub seed: u64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_subject")]
    pub subject_id: String,
}

impl SyntheticSpec {
    /// Diagonal covariances alternating `high, low, high, ...` for class 1 and
    /// `low, high, low, ...` for class 2.
    pub fn diagonal_contrast(
        channels: usize,
        samples_per_trial: usize,
        trials_per_class: usize,
        high: f64,
        low: f64,
        seed: u64,
    ) -> Self {
        let diag = |first: f64, second: f64| -> Vec<Vec<f64>> {
            (0..channels)
                .map(|i| {
                    let mut row = vec![0.0; channels];
                    row[i] = if i % 2 == 0 { first } else { second };
                    row
                })
                .collect()
        };
        SyntheticSpec {
            channels,
            samples_per_trial,
            trials_per_class,
            class_covariances: [diag(high, low), diag(low, high)],
            seed,
            sample_rate_hz: default_rate(),
            subject_id: default_subject(),
        }
    }

    pub fn covariance(&self, label: ClassLabel) -> Result<DMatrix<f64>> {
        let rows = &self.class_covariances[label.index()];
        let d = self.channels;
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Spec(format!(
                "class {label} covariance must be {d}x{d}"
            )));
        }
        Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.samples_per_trial == 0 || self.trials_per_class == 0 {
            return Err(Error::Spec(
                "channels, samples_per_trial and trials_per_class must be positive".into(),
            ));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Spec("sample_rate_hz must be positive".into()));
        }
        for label in ClassLabel::BOTH {
            let cov = self.covariance(label)?;
            check_spd(&cov, label)?;
        }
        Ok(())
    }
}

fn check_spd(cov: &DMatrix<f64>, label: ClassLabel) -> Result<()> {
    let d = cov.nrows();
    for i in 0..d {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                return Err(Error::Spec(format!(
                    "class {label} covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let eig = cov.clone().symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Spec(format!(
            "class {label} covariance is not positive-definite: eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// Draw `trials_per_class` trials for class 1 followed by the same number for
/// class 2. Each sample is `L z` with `L` the Cholesky factor of the class
/// covariance and `z` standard normal from a ChaCha8 stream seeded by
/// `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<TrialRecording>> {
    spec.validate()?;
    let d = spec.channels;
    let t = spec.samples_per_trial;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(2 * spec.trials_per_class);
    for label in ClassLabel::BOTH {
        let cov = spec.covariance(label)?;
        let chol = cov.cholesky().ok_or_else(|| {
            Error::Spec(format!("class {label} covariance has no Cholesky factor"))
        })?;
        let l = chol.l();
        for k in 0..spec.trials_per_class {
            let z = DMatrix::from_fn(d, t, |_, _| StandardNormal.sample(&mut rng));
            let data = &l * z;
            out.push(TrialRecording::new(
                data,
                spec.sample_rate_hz,
                label,
                spec.subject_id.clone(),
                format!("c{label}-{k:04}"),
            )?);
        }
    }
    Ok(out)
}
