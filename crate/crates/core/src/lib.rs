//! Exact streaming coresets for Common Spatial Pattern (CSP) filtering of
//! multichannel EEG.
//!
//! A [`ScatterCoreset`] keeps a `d x d` matrix whose self outer product equals
//! the scatter matrix `X Xᵀ` of every sample absorbed so far. Because CSP only
//! depends on the two class scatter matrices, filters computed from a pair of
//! coresets are the filters of the full signal, at a cost that does not grow
//! with the stream length.
//!
//! Modules:
//! - [`signal`]: trial data model, CSV/EDF readers, synthetic two-class data.
//! - [`dsp`]: Butterworth band-pass and amplitude-based artifact screening.
//! - [`coreset`]: the coreset itself, merge-and-reduce streaming, the 2-3
//!   sliding-window tree and the simulated distributed fold.
//! - [`csp`]: batch and coreset CSP, log-variance features.
//! - [`lda`]: two-class linear discriminant.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coreset;
pub mod csp;
pub mod dsp;
mod error;
pub mod lda;
pub mod linalg;
pub mod signal;

pub use coreset::{
    simulate_distributed, CoresetWindowTree, DistributedOutcome, MergeReduceStream, ScatterCoreset,
};
pub use csp::{
    csp_batch, csp_from_coresets, extract_features, CspOptions, CspStreamState, EigenRoute,
    SpatialFilterBank,
};
pub use dsp::{bandpass, reject_artifacts, ArtifactPolicy, FilterMode, FilterSpec, Rejection};
pub use error::{Error, Result};
pub use lda::{lda_fit, lda_predict, LdaModel};
pub use signal::{ClassLabel, SyntheticSpec, TrialManifest, TrialRecording};
