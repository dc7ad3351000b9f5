//! Benchmark harness comparing coreset CSP with batch CSP on recorded or
//! synthetic two-class EEG.
//!
//! Each command has a `run_*` function returning its results in memory and
//! a `cmd_*` wrapper that also writes the output files.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod export;
pub mod output;
pub mod stream;
pub mod synth;
pub mod window;

pub use config::{FilterConfig, InputSource, Pipeline, RunConfig};
pub use error::{BenchError, BenchResult};
pub use eval::{cmd_eval, run_eval, EvalOutcome, EvalReport, Prediction, Route};
pub use export::{cmd_export_components, run_export, ComponentRow, ExportOutcome};
pub use stream::{cmd_stream_bench, run_stream, StreamMetricsRow, StreamOutcome, StreamSummary};
pub use synth::cmd_synth;
pub use window::{cmd_window_demo, run_window, WindowTraceRow};
