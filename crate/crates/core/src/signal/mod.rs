//! Trial data model and readers.
//!
//! Every trial is stored channel-major: `data` has one row per channel and
//! one column per time sample, so a single sample is a column vector.

mod csv_io;
mod edf;
mod manifest;
mod synthetic;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use csv_io::{read_trial_csv, write_trial_csv};
pub use edf::{parse_edf, read_edf, EdfChannel, EdfRecording};
pub use manifest::{ManifestEntry, TrialManifest};
pub use synthetic::{generate_synthetic, SyntheticSpec};

/// The two motor-imagery classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ClassLabel {
    One,
    Two,
}

impl ClassLabel {
    pub const BOTH: [ClassLabel; 2] = [ClassLabel::One, ClassLabel::Two];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::One => 0,
            ClassLabel::Two => 1,
        }
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(ClassLabel::One),
            2 => Ok(ClassLabel::Two),
            other => Err(format!("class label must be 1 or 2, got {other}")),
        }
    }
}

impl From<ClassLabel> for u8 {
    fn from(l: ClassLabel) -> u8 {
        match l {
            ClassLabel::One => 1,
            ClassLabel::Two => 2,
        }
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

/// One labeled multichannel segment, `channels x samples`, in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecording {
    data: DMatrix<f64>,
    pub sample_rate_hz: f64,
    pub label: ClassLabel,
    pub subject_id: String,
    pub trial_id: String,
}

impl TrialRecording {
    pub fn new(
        data: DMatrix<f64>,
        sample_rate_hz: f64,
        label: ClassLabel,
        subject_id: impl Into<String>,
        trial_id: impl Into<String>,
    ) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptyInput(format!(
                "trial must have at least one channel and one sample, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Spec(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        crate::linalg::check_finite(data.as_view())?;
        Ok(TrialRecording {
            data,
            sample_rate_hz,
            label,
            subject_id: subject_id.into(),
            trial_id: trial_id.into(),
        })
    }

    pub fn channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn view(&self) -> DMatrixView<'_, f64> {
        self.data.as_view()
    }

    /// Replace the samples, keeping the metadata. Used by preprocessing
    /// stages that preserve shape.
    pub fn with_data(&self, data: DMatrix<f64>) -> Result<Self> {
        if data.shape() != self.data.shape() {
            return Err(Error::Dimension {
                context: "TrialRecording::with_data",
                expected: self.data.len(),
                found: data.len(),
            });
        }
        TrialRecording::new(
            data,
            self.sample_rate_hz,
            self.label,
            self.subject_id.clone(),
            self.trial_id.clone(),
        )
    }
}
