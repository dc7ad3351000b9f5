//! `stream-bench`: replay the input sample by sample and track both
//! pipelines' filters, cost and storage.

use std::path::Path;
use std::time::Instant;

use eeg_coreset::csp::objective;
use eeg_coreset::{csp_batch, ClassLabel, CspOptions, CspStreamState};
use log::{info, warn};
use nalgebra::DMatrixView;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{prepare, replay_order};
use crate::error::{BenchError, BenchResult};
use crate::output::{write_csv, write_json};

/// Coreset updates after readiness that are excluded from timing medians.
pub const WARMUP_UPDATES: u64 = 100;

/// Counters kept next to the live matrices: one sample count per class.
pub const FIXED_OVERHEAD_SCALARS: usize = 2;

pub const STREAM_METRICS_FILE: &str = "stream_metrics.csv";
pub const STREAM_SUMMARY_FILE: &str = "stream_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMetricsRow {
    /// Samples replayed so far, this one included.
    pub sample_index: u64,
    pub objective_ratio: Option<f64>,
    pub coreset_update_ns: Option<u64>,
    pub batch_update_ns: Option<u64>,
    pub coreset_resident_scalars: Option<usize>,
    pub batch_resident_scalars: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecileMedians {
    pub first_ns: Option<f64>,
    pub last_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub channels: usize,
    pub total_samples: u64,
    pub requested_stride: usize,
    pub stride: usize,
    /// First sample index at which both classes held at least `d` samples.
    pub ready_at: Option<u64>,
    pub rows: usize,
    pub skipped_not_ready: u64,
    pub warmup_updates: u64,
    pub filter_mode: Option<String>,
    pub rejected_trials: usize,
    pub coreset_timing: DecileMedians,
    pub batch_timing: DecileMedians,
}

#[derive(Debug, Clone)]
pub struct StreamOutcome {
    pub rows: Vec<StreamMetricsRow>,
    pub summary: StreamSummary,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Medians over the first post-warm-up decile and the last decile of the
/// stream. A decile is `total / 10` consecutive sample indices; the first
/// one starts right after the warm-up ends.
pub fn decile_medians(
    rows: &[StreamMetricsRow],
    total_samples: u64,
    ready_at: u64,
    pick: impl Fn(&StreamMetricsRow) -> Option<u64>,
) -> DecileMedians {
    let width = (total_samples / 10).max(1);
    let start = ready_at + WARMUP_UPDATES;
    let window = |lo: u64, hi: u64| {
        rows.iter()
            .filter(|r| r.sample_index >= lo && r.sample_index < hi)
            .filter_map(&pick)
            .map(|ns| ns as f64)
            .collect::<Vec<_>>()
    };
    DecileMedians {
        first_ns: median(window(start, start + width)),
        last_ns: median(window(total_samples + 1 - width, total_samples + 1)),
    }
}

fn class_view(store: &[f64], d: usize) -> DMatrixView<'_, f64> {
    DMatrixView::from_slice(store, d, store.len() / d)
}

/// Choose a stride whose estimated batch cost fits the budget. One batch
/// recompute at `t` samples costs about `d² t` multiply-adds.
fn fit_stride(requested: usize, d: usize, total: u64, budget: f64) -> usize {
    let cost = |stride: usize| (d * d) as f64 * (total as f64).powi(2) / (2.0 * stride as f64);
    let mut stride = requested;
    while cost(stride) > budget && (stride as u64) < total {
        stride *= 2;
    }
    if stride != requested {
        warn!(
            "batch oracle would need ~{:.2e} multiply-adds at stride {requested}; using stride {stride}",
            cost(requested)
        );
    }
    stride
}

pub fn run_stream(cfg: &RunConfig) -> BenchResult<StreamOutcome> {
    let prepared = prepare(cfg)?;
    let d = prepared.channels;
    let trials = &prepared.trials;
    if ClassLabel::BOTH.iter().any(|&l| prepared.count(l) == 0) {
        return Err(BenchError::Data("stream-bench needs trials from both classes".into()));
    }
    let order = replay_order(trials);
    let available: u64 = trials.iter().map(|t| t.samples() as u64).sum();
    let total = cfg.max_samples.map_or(available, |m| available.min(m as u64));
    let stride = if cfg.pipeline.runs_batch() {
        fit_stride(cfg.stride, d, total, cfg.batch_flop_budget)
    } else {
        cfg.stride
    };
    let options = CspOptions {
        ridge: cfg.ridge,
        per_side: cfg.m_components,
        ..CspOptions::default()
    };

    let mut state = CspStreamState::new(d, options)?;
    let mut stores: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut counts = [0u64; 2];
    let mut rows = Vec::new();
    let mut ready_at = None;
    let mut skipped = 0u64;
    let mut index = 0u64;

    'replay: for &ti in &order {
        let trial = &trials[ti];
        let class = trial.label.index();
        for col in trial.data().column_iter() {
            if index == total {
                break 'replay;
            }
            index += 1;
            counts[class] += 1;
            let x = col.as_slice();
            let ready = counts.iter().all(|&c| c >= d as u64);
            if ready && ready_at.is_none() {
                ready_at = Some(index);
            }
            let emit = ready && (index.is_multiple_of(stride as u64) || index == total);
            if !ready && index.is_multiple_of(stride as u64) {
                skipped += 1;
            }

            let mut row = StreamMetricsRow {
                sample_index: index,
                objective_ratio: None,
                coreset_update_ns: None,
                batch_update_ns: None,
                coreset_resident_scalars: None,
                batch_resident_scalars: None,
            };
            let mut coreset_filter = None;
            if cfg.pipeline.runs_coreset() {
                let t0 = Instant::now();
                state.push(x, trial.label)?;
                if emit {
                    let w = state.compute()?.top_filter();
                    row.coreset_update_ns = Some(t0.elapsed().as_nanos() as u64);
                    row.coreset_resident_scalars = Some(state.resident_scalars() + FIXED_OVERHEAD_SCALARS);
                    coreset_filter = Some(w);
                }
            }
            if cfg.pipeline.runs_batch() {
                let t0 = Instant::now();
                stores[class].extend_from_slice(x);
                if emit {
                    let bank = csp_batch(class_view(&stores[0], d), class_view(&stores[1], d), &options)?;
                    row.batch_update_ns = Some(t0.elapsed().as_nanos() as u64);
                    row.batch_resident_scalars =
                        Some(stores[0].len() + stores[1].len() + FIXED_OVERHEAD_SCALARS);
                    if let Some(w) = &coreset_filter {
                        let (x1, x2) = (class_view(&stores[0], d), class_view(&stores[1], d));
                        row.objective_ratio = Some(objective(w, x1, x2) / objective(&bank.top_filter(), x1, x2));
                    }
                }
            }
            if emit {
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Err(BenchError::Numerical(format!(
            "no class reached {d} samples within {total} samples; nothing to report"
        )));
    }
    if skipped > 0 {
        info!("{skipped} rows skipped before both classes held {d} samples");
    }

    let ready = ready_at.expect("rows exist only after readiness");
    let summary = StreamSummary {
        channels: d,
        total_samples: index,
        requested_stride: cfg.stride,
        stride,
        ready_at,
        rows: rows.len(),
        skipped_not_ready: skipped,
        warmup_updates: WARMUP_UPDATES,
        filter_mode: cfg.filter.map(|f| format!("{:?}", f.mode)),
        rejected_trials: prepared.rejected.len(),
        coreset_timing: decile_medians(&rows, index, ready, |r| r.coreset_update_ns),
        batch_timing: decile_medians(&rows, index, ready, |r| r.batch_update_ns),
    };
    Ok(StreamOutcome { rows, summary })
}

pub fn cmd_stream_bench(cfg: &RunConfig, out_dir: &Path) -> BenchResult<StreamOutcome> {
    let outcome = run_stream(cfg)?;
    write_csv(&out_dir.join(STREAM_METRICS_FILE), &outcome.rows)?;
    write_json(&out_dir.join(STREAM_SUMMARY_FILE), &outcome.summary)?;
    Ok(outcome)
}
