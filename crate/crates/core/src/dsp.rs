//! Band-pass filtering and artifact screening applied before coreset
//! construction.
//!
//! The band-pass is a digital Butterworth design (analog prototype, low-pass
//! to band-pass transform, bilinear transform with pre-warping) realised as a
//! cascade of biquads. `order` is the prototype order, so the band-pass has
//! `2 * order` poles. Filters start from zero state; edge transients are not
//! trimmed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::signal::TrialRecording;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Forward then backward pass: zero phase, squared magnitude response.
    ZeroPhaseOffline,
    /// Single forward pass, usable sample by sample.
    CausalStreaming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
    pub sample_rate_hz: f64,
    pub mode: FilterMode,
}

impl FilterSpec {
    /// 0.5-8 Hz, 4th order, zero phase.
    pub fn delta_theta(sample_rate_hz: f64) -> Self {
        FilterSpec {
            low_cut_hz: 0.5,
            high_cut_hz: 8.0,
            order: 4,
            sample_rate_hz,
            mode: FilterMode::ZeroPhaseOffline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz / 2.0;
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Spec(format!(
                "sample rate must be positive, got {}",
                self.sample_rate_hz
            )));
        }
        if !(0.0 < self.low_cut_hz && self.low_cut_hz < self.high_cut_hz && self.high_cut_hz < nyquist)
        {
            return Err(Error::Spec(format!(
                "cutoffs must satisfy 0 < low < high < fs/2 = {nyquist}, got {} and {}",
                self.low_cut_hz, self.high_cut_hz
            )));
        }
        if !(2..=8).contains(&self.order) {
            return Err(Error::Spec(format!(
                "filter order must be in [2, 8], got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// One second-order section, `b0 + b1 z⁻¹ + b2 z⁻²` over `1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (1.0 + z_inv * self.a[0] + z2 * self.a[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandpassDesign {
    pub sections: Vec<Biquad>,
    pub sample_rate_hz: f64,
}

impl BandpassDesign {
    pub fn new(spec: &FilterSpec) -> Result<Self> {
        spec.validate()?;
        Ok(BandpassDesign {
            sections: butterworth_bandpass(spec.order, spec.low_cut_hz, spec.high_cut_hz, spec.sample_rate_hz),
            sample_rate_hz: spec.sample_rate_hz,
        })
    }

    /// Complex response of a single pass at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Direct form II transposed, zero initial state, in place.
    pub fn filter_in_place(&self, x: &mut [f64]) {
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in x.iter_mut() {
                let input = *v;
                let y = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[0] * y + z2;
                z2 = s.b[2] * input - s.a[1] * y;
                *v = y;
            }
        }
    }

    pub fn filter_zero_phase(&self, x: &mut [f64]) {
        self.filter_in_place(x);
        x.reverse();
        self.filter_in_place(x);
        x.reverse();
    }
}

fn butterworth_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Vec<Biquad> {
    // pre-warped analog band edges (rad/s) for the bilinear map s = 2 fs (z-1)/(z+1)
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let (w_lo, w_hi) = (warp(low_hz), warp(high_hz));
    let bw = w_hi - w_lo;
    let w0 = (w_lo * w_hi).sqrt();

    let n = order as f64;
    let mut poles = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = PI * (2.0 * k as f64 + 1.0 + n) / (2.0 * n);
        let p_lp = Complex64::from_polar(1.0, theta) * (bw / 2.0);
        let root = (p_lp * p_lp - w0 * w0).sqrt();
        for p in [p_lp + root, p_lp - root] {
            let k2 = 2.0 * fs;
            poles.push((k2 + p) / (k2 - p));
        }
    }

    // pair conjugates; leftover real poles pair with each other
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > 1e-12).collect();
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let mut real: Vec<f64> = poles.iter().filter(|p| p.im.abs() <= 1e-12).map(|p| p.re).collect();
    real.sort_by(f64::total_cmp);

    let mut dens: Vec<[f64; 2]> = complex.iter().map(|p| [-2.0 * p.re, p.norm_sqr()]).collect();
    for pair in real.chunks(2) {
        dens.push([-(pair[0] + pair[1]), pair[0] * pair[1]]);
    }

    // every section gets one zero at z = 1 and one at z = -1, then unit gain
    // at the digital image of the geometric centre frequency, where the
    // Butterworth magnitude is exactly one
    let omega_c = 2.0 * (w0 / (2.0 * fs)).atan();
    let z_inv = Complex64::from_polar(1.0, -omega_c);
    dens.into_iter()
        .map(|a| {
            let unit = Biquad {
                b: [1.0, 0.0, -1.0],
                a,
            };
            let g = 1.0 / unit.response(z_inv).norm();
            Biquad {
                b: [g, 0.0, -g],
                a,
            }
        })
        .collect()
}

/// Filter every channel independently.
pub fn bandpass(trial: &TrialRecording, spec: &FilterSpec) -> Result<TrialRecording> {
    if (trial.sample_rate_hz - spec.sample_rate_hz).abs() > 1e-9 * spec.sample_rate_hz {
        return Err(Error::Spec(format!(
            "trial sample rate {} does not match filter sample rate {}",
            trial.sample_rate_hz, spec.sample_rate_hz
        )));
    }
    let design = BandpassDesign::new(spec)?;
    trial.with_data(bandpass_matrix(trial.data(), &design, spec.mode))
}

pub(crate) fn bandpass_matrix(data: &DMatrix<f64>, design: &BandpassDesign, mode: FilterMode) -> DMatrix<f64> {
    // transposing makes each channel a contiguous column
    let mut by_channel = data.transpose();
    let t = by_channel.nrows();
    for mut col in by_channel.column_iter_mut() {
        let slice = col.as_mut_slice();
        debug_assert_eq!(slice.len(), t);
        match mode {
            FilterMode::ZeroPhaseOffline => design.filter_zero_phase(slice),
            FilterMode::CausalStreaming => design.filter_in_place(slice),
        }
    }
    by_channel.transpose()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPolicy {
    pub amplitude_limit_uv: f64,
    pub flatline_epsilon_uv: f64,
}

impl Default for ArtifactPolicy {
    fn default() -> Self {
        ArtifactPolicy {
            amplitude_limit_uv: 100.0,
            flatline_epsilon_uv: 1e-6,
        }
    }
}

impl ArtifactPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_limit_uv > self.flatline_epsilon_uv && self.flatline_epsilon_uv >= 0.0) {
            return Err(Error::Spec(format!(
                "artifact policy needs amplitude_limit_uv > flatline_epsilon_uv >= 0, got {} and {}",
                self.amplitude_limit_uv, self.flatline_epsilon_uv
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub trial_id: String,
    /// `"amplitude"` or `"flatline"`.
    pub reason: String,
}

/// Split trials into kept and rejected. A trial is rejected when any channel
/// peaks above the amplitude limit, or when any channel's range over the
/// trial is at most the flatline epsilon. Kept trials stay in input order.
pub fn reject_artifacts(
    trials: &[TrialRecording],
    policy: &ArtifactPolicy,
) -> Result<(Vec<TrialRecording>, Vec<Rejection>)> {
    policy.validate()?;
    if trials.is_empty() {
        return Err(Error::EmptyInput("no trials to screen".into()));
    }
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for trial in trials {
        match screen(trial, policy) {
            None => kept.push(trial.clone()),
            Some(reason) => rejected.push(Rejection {
                trial_id: trial.trial_id.clone(),
                reason: reason.to_string(),
            }),
        }
    }
    Ok((kept, rejected))
}

fn screen(trial: &TrialRecording, policy: &ArtifactPolicy) -> Option<&'static str> {
    let data = trial.data();
    let mut flat = false;
    for row in data.row_iter() {
        let (mut lo, mut hi, mut peak) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for &v in row.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
            peak = peak.max(v.abs());
        }
        if peak > policy.amplitude_limit_uv {
            return Some("amplitude");
        }
        if hi - lo <= policy.flatline_epsilon_uv {
            flat = true;
        }
    }
    flat.then_some("flatline")
}
