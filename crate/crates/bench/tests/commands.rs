use std::path::Path;
use std::process::Command;

use coreset_bench::synth::MANIFEST_FILE;
use coreset_bench::{
    cmd_eval, cmd_export_components, cmd_stream_bench, cmd_synth, run_eval, run_window, InputSource, Route,
    RunConfig,
};
use eeg_coreset::signal::{generate_synthetic, write_trial_csv, ManifestEntry};
use eeg_coreset::{ClassLabel, SyntheticSpec, TrialManifest, TrialRecording};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coreset-bench"));
    c.env("RUST_LOG", "error");
    c
}

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec::diagonal_contrast(4, 60, 6, 10.0, 1.0, seed)
}

fn write_config(dir: &Path, cfg: &serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_byte_identical_and_reingests() {
    let spec = small_spec(3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let manifest = cmd_synth(&spec, a.path()).unwrap();
    cmd_synth(&spec, b.path()).unwrap();
    assert_eq!(read_dir_bytes(a.path()), read_dir_bytes(b.path()));
    assert_eq!(manifest.entries.len(), 2 * spec.trials_per_class);

    let loaded = TrialManifest::load(a.path().join(MANIFEST_FILE)).unwrap();
    let trials = loaded.load_trials(a.path()).unwrap();
    let originals = generate_synthetic(&spec).unwrap();
    for (t, o) in trials.iter().zip(&originals) {
        assert_eq!(t.label, o.label);
        assert_eq!(t.trial_id, o.trial_id);
        assert!((t.data() - o.data()).abs().max() <= 1e-12);
    }
}

#[test]
fn cli_synth_then_stream_bench() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&small_spec(5)).unwrap()).unwrap();
    let data = dir.path().join("data");
    let status = bin()
        .args(["synth", "--spec"])
        .arg(&spec_path)
        .arg("--output")
        .arg(&data)
        .arg("--seed")
        .arg("11")
        .status()
        .unwrap();
    assert!(status.success());

    let cfg = write_config(
        dir.path(),
        &serde_json::json!({
            "input": {"manifest": "data/manifest.json"},
            "filter": {"low_cut_hz": 0.5, "high_cut_hz": 8.0, "order": 4, "mode": "causal_streaming"},
            "artifact_policy": {"amplitude_limit_uv": 1000.0, "flatline_epsilon_uv": 1e-9},
            "output_dir": "results"
        }),
    );
    let status = bin().args(["stream-bench", "--stride", "5", "--config"]).arg(&cfg).status().unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("results/stream_metrics.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sample_index,objective_ratio,coreset_update_ns,batch_update_ns,coreset_resident_scalars,batch_resident_scalars"
    );
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let idx: u64 = f[0].parse().unwrap();
        assert!(idx.is_multiple_of(5) || idx == 720);
        let ratio: f64 = f[1].parse().unwrap();
        assert!((ratio - 1.0).abs() <= 1e-6);
        assert_eq!(f[4], "42");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("results/stream_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["filter_mode"], "CausalStreaming");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["eval", "--config"]).arg(dir.path().join("absent.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("eval").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // manifest naming a file that is not there
    let manifest = TrialManifest {
        sample_rate_hz: 160.0,
        entries: vec![ManifestEntry {
            path: "missing.csv".into(),
            label: ClassLabel::One,
            subject_id: "S".into(),
        }],
    };
    manifest.save(dir.path().join("m.json")).unwrap();
    let cfg = write_config(dir.path(), &serde_json::json!({"input": {"manifest": "m.json"}}));
    let out = bin().args(["eval", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    // class 2 is silent: no ridge can make its covariance invertible
    let zeros = TrialRecording::new(DMatrix::zeros(3, 20), 160.0, ClassLabel::Two, "S", "z").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = DMatrix::from_fn(3, 20, |_, _| rng.sample::<f64, _>(StandardNormal));
    let live = TrialRecording::new(noise, 160.0, ClassLabel::One, "S", "n").unwrap();
    write_trial_csv(&zeros, dir.path().join("z.csv")).unwrap();
    write_trial_csv(&live, dir.path().join("n.csv")).unwrap();
    let manifest = TrialManifest {
        sample_rate_hz: 160.0,
        entries: vec![
            ManifestEntry { path: "n.csv".into(), label: ClassLabel::One, subject_id: "S".into() },
            ManifestEntry { path: "z.csv".into(), label: ClassLabel::Two, subject_id: "S".into() },
        ],
    };
    manifest.save(dir.path().join("m.json")).unwrap();
    let out = bin().args(["export-components", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn exported_components_agree_across_pipelines() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(InputSource::Synthetic(SyntheticSpec::diagonal_contrast(6, 200, 8, 10.0, 1.0, 9)));
    cfg.m_components = 2;
    cfg.machines = 3;
    let out = cmd_export_components(&cfg, dir.path()).unwrap();
    assert_eq!(out.rows.len(), 2 * 2 * 2 * 6);
    let (core, batch) = (&out.banks[0].1, &out.banks[1].1);
    assert_eq!(out.banks[0].0, Route::Coreset);
    let (fc, fb) = (core.selected_filters(), batch.selected_filters());
    assert_eq!(fc.ncols(), 4);
    for j in 0..4 {
        assert!((fc.column(j).norm() - 1.0).abs() <= 1e-9);
        assert!(fc.column(j).dot(&fb.column(j)).abs() >= 1.0 - 1e-8);
    }
    let csv = std::fs::read_to_string(dir.path().join("components.csv")).unwrap();
    assert!(csv.starts_with("pipeline,component_rank,eigenvalue,channel_index,weight\n"));
    assert!(dir.path().join("filters_coreset.json").is_file());
    assert!(dir.path().join("filters_batch.json").is_file());
}

#[test]
fn window_covering_the_stream_matches_longer_window() {
    let spec = SyntheticSpec::diagonal_contrast(5, 30, 4, 10.0, 1.0, 2);
    let mut cfg = RunConfig::new(InputSource::Synthetic(spec));
    cfg.window_length = Some(240);
    let exact = run_window(&cfg).unwrap();
    cfg.window_length = Some(1_000_000);
    let unbounded = run_window(&cfg).unwrap();
    assert_eq!(exact, unbounded);
    assert!(exact.iter().all(|r| r.max_rel_deviation <= 1e-10));

    // narrower than d: still runs, with ridge
    cfg.window_length = Some(3);
    let narrow = run_window(&cfg).unwrap();
    assert!(narrow.iter().all(|r| r.max_rel_deviation <= 1e-10));
    assert!(narrow.last().unwrap().top_eigenvalue.is_some());
    assert_eq!(narrow.last().unwrap().live_class_2, 3);
}

/// Each class is a few distinct strongly contrasted trials, every one of
/// them present twice, so every held-out trial has a twin in training.
fn duplicated_manifest(dir: &Path) -> std::path::PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut entries = Vec::new();
    for (label, scales) in [(ClassLabel::One, [30.0, 1.0, 1.0]), (ClassLabel::Two, [1.0, 30.0, 1.0])] {
        for k in 0..5 {
            let data = DMatrix::from_fn(3, 80, |r, _| scales[r] * rng.sample::<f64, _>(StandardNormal));
            let trial = TrialRecording::new(data, 160.0, label, "S001", format!("{label}-{k}")).unwrap();
            for copy in 0..2 {
                let rel = format!("{label}-{k}-{copy}.csv");
                write_trial_csv(&trial, dir.join(&rel)).unwrap();
                entries.push(ManifestEntry { path: rel.into(), label, subject_id: "S001".into() });
            }
        }
    }
    // a subject with one class only is skipped
    let lone = TrialRecording::new(DMatrix::from_element(3, 10, 1.0), 160.0, ClassLabel::One, "S002", "x").unwrap();
    write_trial_csv(&lone, dir.join("lone.csv")).unwrap();
    entries.push(ManifestEntry { path: "lone.csv".into(), label: ClassLabel::One, subject_id: "S002".into() });
    let path = dir.join("manifest.json");
    TrialManifest { sample_rate_hz: 160.0, entries }.save(&path).unwrap();
    path
}

#[test]
fn perfect_classifier_gives_identity_confusion() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(InputSource::Manifest(duplicated_manifest(dir.path())));
    cfg.m_components = 1;
    let out = cmd_eval(&cfg, &dir.path().join("out")).unwrap();
    for r in &out.reports {
        assert_eq!(r.confusion, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(r.skipped_subjects, vec!["S002".to_string()]);
        assert_eq!(r.per_subject_accuracy.len(), 1);
        assert_eq!(r.per_subject_accuracy[0].trials, 20);
    }
    let confusion = std::fs::read_to_string(dir.path().join("out/confusion.csv")).unwrap();
    assert_eq!(
        confusion,
        "pipeline,true_label,predicted_1,predicted_2\ncoreset,1,1.0,0.0\ncoreset,2,0.0,1.0\nbatch,1,1.0,0.0\nbatch,2,0.0,1.0\n"
    );
    let report: Vec<coreset_bench::EvalReport> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/eval_report.json")).unwrap()).unwrap();
    assert_eq!(report, out.reports);
}

#[test]
fn eval_aggregates_recompute_and_pipelines_agree() {
    let mut trials_spec = SyntheticSpec::diagonal_contrast(4, 80, 5, 4.0, 1.0, 31);
    trials_spec.subject_id = "S010".into();
    let dir = tempfile::tempdir().unwrap();
    cmd_synth(&trials_spec, &dir.path().join("a")).unwrap();
    trials_spec.subject_id = "S011".into();
    trials_spec.seed = 32;
    cmd_synth(&trials_spec, &dir.path().join("b")).unwrap();
    let mut entries = Vec::new();
    for sub in ["a", "b"] {
        let m = TrialManifest::load(dir.path().join(sub).join(MANIFEST_FILE)).unwrap();
        for mut e in m.entries {
            e.path = Path::new(sub).join(e.path);
            entries.push(e);
        }
    }
    let path = dir.path().join("all.json");
    TrialManifest { sample_rate_hz: 160.0, entries }.save(&path).unwrap();

    let mut cfg = RunConfig::new(InputSource::Manifest(path));
    cfg.machines = 2;
    let out = run_eval(&cfg).unwrap();
    for r in &out.reports {
        let acc: Vec<f64> = r.per_subject_accuracy.iter().map(|a| a.accuracy).collect();
        let mean = acc.iter().sum::<f64>() / acc.len() as f64;
        let std = (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / acc.len() as f64).sqrt();
        assert!((r.mean_accuracy - mean).abs() <= 1e-12);
        assert!((r.std_accuracy - std).abs() <= 1e-12);
        for row in r.confusion {
            assert!((row[0] + row[1] - 1.0).abs() <= 1e-9);
        }
    }
    let labels = |route| out.predictions.iter().filter(move |p| p.pipeline == route).map(|p| p.predicted_label);
    assert!(labels(Route::Coreset).eq(labels(Route::Batch)));
}

#[test]
fn stream_outputs_deterministic_apart_from_timing() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = RunConfig::new(InputSource::Synthetic(small_spec(8)));
    let x = cmd_stream_bench(&cfg, a.path()).unwrap();
    let y = cmd_stream_bench(&cfg, b.path()).unwrap();
    let strip = |rows: &[coreset_bench::StreamMetricsRow]| {
        rows.iter()
            .map(|r| (r.sample_index, r.objective_ratio.map(f64::to_bits), r.coreset_resident_scalars, r.batch_resident_scalars))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&x.rows), strip(&y.rows));
    assert_eq!(x.summary.ready_at, Some(64));
}
