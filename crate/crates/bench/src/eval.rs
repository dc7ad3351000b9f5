//! `eval`: per-subject leave-one-trial-out classification with CSP
//! log-variance features and LDA.

use std::collections::BTreeMap;
use std::path::Path;

use eeg_coreset::{
    csp_batch, csp_from_coresets, extract_features, lda_fit, lda_predict, simulate_distributed, ClassLabel,
    CspOptions, ScatterCoreset, SpatialFilterBank, TrialRecording,
};
use log::warn;
use nalgebra::DMatrixView;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Pipeline, RunConfig};
use crate::data::prepare;
use crate::error::{BenchError, BenchResult};
use crate::output::{write_csv, write_json};

pub const EVAL_REPORT_FILE: &str = "eval_report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

/// The two concrete CSP routes; `Pipeline::Both` expands to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Coreset,
    Batch,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Coreset => "coreset",
            Route::Batch => "batch",
        }
    }

    pub fn selected(p: Pipeline) -> Vec<Route> {
        let mut v = Vec::new();
        if p.runs_coreset() {
            v.push(Route::Coreset);
        }
        if p.runs_batch() {
            v.push(Route::Batch);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectAccuracy {
    pub subject_id: String,
    pub accuracy: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub pipeline: Route,
    pub per_subject_accuracy: Vec<SubjectAccuracy>,
    pub mean_accuracy: f64,
    /// Population standard deviation of the per-subject accuracies.
    pub std_accuracy: f64,
    /// `confusion[true][predicted]`, each row normalised by its true-label
    /// count.
    pub confusion: [[f64; 2]; 2],
    pub skipped_subjects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub pipeline: Route,
    pub subject_id: String,
    pub trial_id: String,
    pub true_label: ClassLabel,
    pub predicted_label: ClassLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConfusionRow {
    pipeline: Route,
    true_label: ClassLabel,
    predicted_1: f64,
    predicted_2: f64,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub reports: Vec<EvalReport>,
    pub predictions: Vec<Prediction>,
}

/// Trials of one subject plus the per-trial coresets the coreset route
/// merges for each fold.
struct SubjectData<'a> {
    id: String,
    trials: Vec<&'a TrialRecording>,
    coresets: Vec<ScatterCoreset>,
}

pub struct FitSettings {
    pub options: CspOptions,
    pub machines: usize,
    pub shrinkage: f64,
}

/// Filters from the given trials through one route. The coreset route folds
/// per-trial coresets across the simulated workers; the batch route
/// concatenates the raw samples.
pub fn fit_filters(
    route: Route,
    trials: &[&TrialRecording],
    coresets: &[&ScatterCoreset],
    settings: &FitSettings,
) -> BenchResult<SpatialFilterBank> {
    let d = trials.first().map(|t| t.channels()).ok_or_else(|| BenchError::Data("no training trials".into()))?;
    match route {
        Route::Coreset => {
            let mut folded = Vec::with_capacity(2);
            for label in ClassLabel::BOTH {
                let chunks: Vec<ScatterCoreset> = trials
                    .iter()
                    .zip(coresets)
                    .filter(|(t, _)| t.label == label)
                    .map(|(_, c)| (*c).clone())
                    .collect();
                folded.push(simulate_distributed(&chunks, settings.machines)?.coreset);
            }
            Ok(csp_from_coresets(&folded[0], &folded[1], &settings.options)?)
        }
        Route::Batch => {
            let mut stores: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for t in trials {
                stores[t.label.index()].extend_from_slice(t.data().as_slice());
            }
            let x1 = DMatrixView::from_slice(&stores[0], d, stores[0].len() / d);
            let x2 = DMatrixView::from_slice(&stores[1], d, stores[1].len() / d);
            Ok(csp_batch(x1, x2, &settings.options)?)
        }
    }
}

fn run_subject(
    subject: &SubjectData<'_>,
    routes: &[Route],
    settings: &FitSettings,
) -> BenchResult<Vec<Prediction>> {
    let n = subject.trials.len();
    let mut out = Vec::with_capacity(n * routes.len());
    for &route in routes {
        for held in 0..n {
            let train: Vec<&TrialRecording> = (0..n).filter(|&i| i != held).map(|i| subject.trials[i]).collect();
            let train_cs: Vec<&ScatterCoreset> =
                (0..n).filter(|&i| i != held).map(|i| &subject.coresets[i]).collect();
            let bank = fit_filters(route, &train, &train_cs, settings)?;
            let samples = train
                .iter()
                .map(|t| Ok((extract_features(t.view(), &bank)?, t.label)))
                .collect::<eeg_coreset::Result<Vec<_>>>()?;
            let model = lda_fit(&samples, settings.shrinkage)?;
            let test = subject.trials[held];
            let (predicted, score) = lda_predict(&model, &extract_features(test.view(), &bank)?)?;
            out.push(Prediction {
                pipeline: route,
                subject_id: subject.id.clone(),
                trial_id: test.trial_id.clone(),
                true_label: test.label,
                predicted_label: predicted,
                score,
            });
        }
    }
    Ok(out)
}

fn report_for(route: Route, predictions: &[Prediction], subjects: &[String], skipped: &[String]) -> EvalReport {
    let mine: Vec<&Prediction> = predictions.iter().filter(|p| p.pipeline == route).collect();
    let per_subject_accuracy: Vec<SubjectAccuracy> = subjects
        .iter()
        .map(|s| {
            let rows: Vec<&&Prediction> = mine.iter().filter(|p| &p.subject_id == s).collect();
            let correct = rows.iter().filter(|p| p.predicted_label == p.true_label).count();
            SubjectAccuracy {
                subject_id: s.clone(),
                accuracy: correct as f64 / rows.len() as f64,
                trials: rows.len(),
            }
        })
        .collect();
    let (mean_accuracy, std_accuracy) = mean_std(per_subject_accuracy.iter().map(|a| a.accuracy));
    let mut counts = [[0usize; 2]; 2];
    for p in &mine {
        counts[p.true_label.index()][p.predicted_label.index()] += 1;
    }
    let mut confusion = [[0.0; 2]; 2];
    for (row, c) in confusion.iter_mut().zip(counts) {
        let total = c[0] + c[1];
        if total > 0 {
            *row = [c[0] as f64 / total as f64, c[1] as f64 / total as f64];
        }
    }
    EvalReport {
        pipeline: route,
        per_subject_accuracy,
        mean_accuracy,
        std_accuracy,
        confusion,
        skipped_subjects: skipped.to_vec(),
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

pub fn run_eval(cfg: &RunConfig) -> BenchResult<EvalOutcome> {
    let prepared = prepare(cfg)?;
    let settings = FitSettings {
        options: CspOptions {
            ridge: cfg.ridge,
            per_side: cfg.m_components,
            ..CspOptions::default()
        },
        machines: cfg.machines,
        shrinkage: cfg.lda_shrinkage,
    };
    let routes = Route::selected(cfg.pipeline);

    let mut grouped: BTreeMap<&str, Vec<&TrialRecording>> = BTreeMap::new();
    let mut first_seen: Vec<&str> = Vec::new();
    for t in &prepared.trials {
        let entry = grouped.entry(t.subject_id.as_str()).or_default();
        if entry.is_empty() {
            first_seen.push(t.subject_id.as_str());
        }
        entry.push(t);
    }
    let mut subjects = Vec::new();
    let mut skipped = Vec::new();
    for id in first_seen {
        let trials = grouped.remove(id).expect("grouped above");
        let per_class = ClassLabel::BOTH.map(|l| trials.iter().filter(|t| t.label == l).count());
        if per_class.iter().any(|&c| c < 2) {
            warn!("skipping subject {id}: needs two trials per class, has {per_class:?}");
            skipped.push(id.to_string());
            continue;
        }
        let coresets = trials
            .iter()
            .map(|t| ScatterCoreset::from_samples(t.view()))
            .collect::<eeg_coreset::Result<Vec<_>>>()?;
        subjects.push(SubjectData {
            id: id.to_string(),
            trials,
            coresets,
        });
    }
    if subjects.is_empty() {
        return Err(BenchError::Data("no subject has two trials of each class".into()));
    }

    let per_subject: Vec<BenchResult<Vec<Prediction>>> =
        subjects.par_iter().map(|s| run_subject(s, &routes, &settings)).collect();
    let mut predictions = Vec::new();
    for r in per_subject {
        predictions.extend(r?);
    }
    predictions.sort_by_key(|p| p.pipeline);

    let ids: Vec<String> = subjects.iter().map(|s| s.id.clone()).collect();
    let reports = routes.iter().map(|&r| report_for(r, &predictions, &ids, &skipped)).collect();
    Ok(EvalOutcome { reports, predictions })
}

pub fn cmd_eval(cfg: &RunConfig, out_dir: &Path) -> BenchResult<EvalOutcome> {
    let outcome = run_eval(cfg)?;
    write_json(&out_dir.join(EVAL_REPORT_FILE), &outcome.reports)?;
    let confusion: Vec<ConfusionRow> = outcome
        .reports
        .iter()
        .flat_map(|r| {
            ClassLabel::BOTH.map(|l| ConfusionRow {
                pipeline: r.pipeline,
                true_label: l,
                predicted_1: r.confusion[l.index()][0],
                predicted_2: r.confusion[l.index()][1],
            })
        })
        .collect();
    write_csv(&out_dir.join(CONFUSION_FILE), &confusion)?;
    write_csv(&out_dir.join(PREDICTIONS_FILE), &outcome.predictions)?;
    Ok(outcome)
}
