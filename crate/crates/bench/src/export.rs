//! `export-components`: the selected CSP filters of both pipelines, trained
//! on every prepared trial, as plotting-ready rows.

use std::path::Path;

use eeg_coreset::{ClassLabel, CspOptions, ScatterCoreset, SpatialFilterBank, TrialRecording};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::prepare;
use crate::error::{BenchError, BenchResult};
use crate::eval::{fit_filters, FitSettings, Route};
use crate::output::{write_csv, write_text};

pub const COMPONENTS_FILE: &str = "components.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub pipeline: Route,
    /// 0-based position among the exported filters: the `m` largest
    /// eigenvalues first, then the `m` smallest.
    pub component_rank: usize,
    pub eigenvalue: f64,
    pub channel_index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ExportOutcome {
    pub banks: Vec<(Route, SpatialFilterBank)>,
    pub rows: Vec<ComponentRow>,
}

pub fn component_rows(route: Route, bank: &SpatialFilterBank) -> Vec<ComponentRow> {
    let mut rows = Vec::new();
    for (rank, idx) in bank.selected_indices().into_iter().enumerate() {
        let col = bank.filters().column(idx);
        for (channel_index, &weight) in col.iter().enumerate() {
            rows.push(ComponentRow {
                pipeline: route,
                component_rank: rank,
                eigenvalue: bank.eigenvalues()[idx],
                channel_index,
                weight,
            });
        }
    }
    rows
}

pub fn run_export(cfg: &RunConfig) -> BenchResult<ExportOutcome> {
    let prepared = prepare(cfg)?;
    if ClassLabel::BOTH.iter().any(|&l| prepared.count(l) == 0) {
        return Err(BenchError::Numerical("filters need trials from both classes".into()));
    }
    let settings = FitSettings {
        options: CspOptions {
            ridge: cfg.ridge,
            per_side: cfg.m_components,
            ..CspOptions::default()
        },
        machines: cfg.machines,
        shrinkage: cfg.lda_shrinkage,
    };
    let trials: Vec<&TrialRecording> = prepared.trials.iter().collect();
    let coresets = trials
        .iter()
        .map(|t| ScatterCoreset::from_samples(t.view()))
        .collect::<eeg_coreset::Result<Vec<_>>>()?;
    let coreset_refs: Vec<&ScatterCoreset> = coresets.iter().collect();

    let mut banks = Vec::new();
    let mut rows = Vec::new();
    for route in Route::selected(cfg.pipeline) {
        let bank = fit_filters(route, &trials, &coreset_refs, &settings)?;
        rows.extend(component_rows(route, &bank));
        banks.push((route, bank));
    }
    Ok(ExportOutcome { banks, rows })
}

pub fn cmd_export_components(cfg: &RunConfig, out_dir: &Path) -> BenchResult<ExportOutcome> {
    let outcome = run_export(cfg)?;
    write_csv(&out_dir.join(COMPONENTS_FILE), &outcome.rows)?;
    for (route, bank) in &outcome.banks {
        write_text(&out_dir.join(format!("filters_{}.json", route.name())), &bank.to_json()?)?;
    }
    Ok(outcome)
}
