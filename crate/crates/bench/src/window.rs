//! `window-demo`: per-class sliding-window coresets checked against a naive
//! scatter of the live window at every step.

use std::collections::VecDeque;
use std::path::Path;

use eeg_coreset::csp::AUTO_RIDGE;
use eeg_coreset::linalg::rel_frobenius;
use eeg_coreset::{csp_from_coresets, ClassLabel, CoresetWindowTree, CspOptions, ScatterCoreset};
use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{prepare, replay_order};
use crate::error::{BenchError, BenchResult};
use crate::output::write_csv;

pub const WINDOW_TRACE_FILE: &str = "window_trace.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTraceRow {
    pub step: u64,
    pub class: ClassLabel,
    pub live_class_1: u64,
    pub live_class_2: u64,
    /// Largest relative Frobenius deviation between tree root and naive
    /// window scatter over both classes.
    pub max_rel_deviation: f64,
    pub recomputations: u64,
    /// Leading CSP eigenvalue from the two window coresets, once both
    /// classes hold samples.
    pub top_eigenvalue: Option<f64>,
}

fn naive_scatter(window: &VecDeque<DVector<f64>>, d: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(d, d);
    for x in window {
        s.ger(1.0, x, x, 1.0);
    }
    s
}

pub fn run_window(cfg: &RunConfig) -> BenchResult<Vec<WindowTraceRow>> {
    let window = cfg
        .window_length
        .ok_or_else(|| BenchError::Config("window-demo needs window_length".into()))?;
    let prepared = prepare(cfg)?;
    let d = prepared.channels;
    let mut options = CspOptions {
        ridge: cfg.ridge,
        per_side: cfg.m_components,
        ..CspOptions::default()
    };
    if window < d as u64 {
        warn!("window of {window} samples is below d = {d}; filters may be rank-deficient, applying ridge");
        options.ridge = options.ridge.max(AUTO_RIDGE);
    }

    let mut trees = [
        CoresetWindowTree::new(d, 1, Some(window))?,
        CoresetWindowTree::new(d, 1, Some(window))?,
    ];
    let mut live: [VecDeque<DVector<f64>>; 2] = [VecDeque::new(), VecDeque::new()];
    let mut deviation = [0.0f64; 2];
    let mut rows = Vec::new();
    let mut step = 0u64;
    let limit = cfg.max_samples.map_or(u64::MAX, |m| m as u64);

    'replay: for ti in replay_order(&prepared.trials) {
        let trial = &prepared.trials[ti];
        let c = trial.label.index();
        for j in 0..trial.samples() {
            let col = trial.data().column(j);
            if step == limit {
                break 'replay;
            }
            step += 1;
            trees[c].insert(ScatterCoreset::from_samples(trial.view().columns(j, 1))?, 1)?;
            live[c].push_back(col.into_owned());
            while live[c].len() as u64 > window {
                live[c].pop_front();
            }
            deviation[c] = rel_frobenius(&trees[c].root_scatter(), &naive_scatter(&live[c], d));

            let top_eigenvalue = if trees.iter().all(|t| t.live_span() > 0) {
                let bank = csp_from_coresets(&trees[0].root(), &trees[1].root(), &options)?;
                Some(bank.eigenvalues()[0])
            } else {
                None
            };
            rows.push(WindowTraceRow {
                step,
                class: trial.label,
                live_class_1: trees[0].live_span(),
                live_class_2: trees[1].live_span(),
                max_rel_deviation: deviation[0].max(deviation[1]),
                recomputations: trees[0].recomputations() + trees[1].recomputations(),
                top_eigenvalue,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_window_demo(cfg: &RunConfig, out_dir: &Path) -> BenchResult<Vec<WindowTraceRow>> {
    let rows = run_window(cfg)?;
    write_csv(&out_dir.join(WINDOW_TRACE_FILE), &rows)?;
    Ok(rows)
}
