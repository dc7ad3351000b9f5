use eeg_coreset::csp::objective;
use eeg_coreset::linalg::{dense_scatter, rel_frobenius};
use eeg_coreset::signal::generate_synthetic;
use eeg_coreset::{
    csp_batch, csp_from_coresets, ClassLabel, CspOptions, CspStreamState, MergeReduceStream, ScatterCoreset,
    SyntheticSpec,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn class_matrix(trials: &[eeg_coreset::TrialRecording], label: ClassLabel) -> DMatrix<f64> {
    let parts: Vec<_> = trials.iter().filter(|t| t.label == label).collect();
    let d = parts[0].channels();
    let t: usize = parts.iter().map(|p| p.samples()).sum();
    let mut out = DMatrix::zeros(d, t);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.samples()).copy_from(p.data());
        at += p.samples();
    }
    out
}

/// Grid search over unit vectors in the plane for the largest
/// `‖wX₁‖² / ‖wX₂‖²`; the CSP top filter must sit at the grid optimum.
#[test]
fn top_filter_matches_rayleigh_grid_search() {
    let spec = SyntheticSpec::diagonal_contrast(2, 500, 20, 10.0, 1.0, 21);
    let trials = generate_synthetic(&spec).unwrap();
    let (x1, x2) = (class_matrix(&trials, ClassLabel::One), class_matrix(&trials, ClassLabel::Two));
    let bank = csp_batch(x1.as_view(), x2.as_view(), &CspOptions::default()).unwrap();
    let w = bank.top_filter();

    let steps = 20_000;
    let (mut best, mut best_w) = (f64::MIN, DVector::zeros(2));
    for k in 0..steps {
        let th = std::f64::consts::PI * k as f64 / steps as f64;
        let v = DVector::from_vec(vec![th.cos(), th.sin()]);
        let r = objective(&v, x1.as_view(), x2.as_view());
        if r > best {
            best = r;
            best_w = v;
        }
    }
    let exact = objective(&w, x1.as_view(), x2.as_view());
    assert!(exact >= best - 1e-9 * best, "{exact} < grid {best}");
    assert!(w.dot(&best_w).abs() > 1.0 - 1e-6);
    // axis-aligned: class 1 has its high variance on channel 0
    assert!(w[0].abs() > 0.99);
}

#[test]
fn stream_state_tracks_batch_sample_by_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 4;
    let x1 = DMatrix::from_fn(d, 60, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x2 = DMatrix::from_fn(d, 60, |r, _| (r + 1) as f64 * rng.sample::<f64, _>(StandardNormal));
    let mut state = CspStreamState::new(d, CspOptions::default()).unwrap();
    for k in 0..60 {
        state.push(x1.column(k).as_slice(), ClassLabel::One).unwrap();
        let bank = state.update(x2.column(k).as_slice(), ClassLabel::Two).unwrap().clone();
        if k + 1 < d {
            continue;
        }
        let batch = csp_batch(x1.columns(0, k + 1), x2.columns(0, k + 1), &CspOptions::default()).unwrap();
        let rel = (bank.eigenvalues() - batch.eigenvalues()).norm() / batch.eigenvalues().norm();
        assert!(rel <= 1e-9, "step {k}: {rel:e}");
    }
    assert_eq!(state.resident_scalars(), 2 * (d * d + d));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any partition of a stream into chunks, folded through the
    /// merge-and-reduce levels, has the scatter of the whole stream.
    #[test]
    fn chunked_merge_reduce_is_exact(d in 1usize..8, cuts in prop::collection::vec(1usize..30, 1..40), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: usize = cuts.iter().sum();
        let x = DMatrix::from_fn(d, t, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut stream = MergeReduceStream::new(d).unwrap();
        let mut at = 0;
        for n in &cuts {
            stream.push(ScatterCoreset::from_samples(x.columns(at, *n)).unwrap()).unwrap();
            at += n;
        }
        let root = stream.root();
        prop_assert_eq!(root.sample_count(), t as u64);
        prop_assert!(root.columns() <= d);
        prop_assert!(rel_frobenius(&root.scatter(), &dense_scatter(x.as_view())) <= 1e-10);
    }

    #[test]
    fn coreset_filters_equal_batch_filters(d in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mix1 = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mix2 = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x1 = mix1 * DMatrix::from_fn(d, 200, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x2 = mix2 * DMatrix::from_fn(d, 150, |_, _| rng.sample::<f64, _>(StandardNormal));
        let opts = CspOptions::default();
        let batch = csp_batch(x1.as_view(), x2.as_view(), &opts).unwrap();
        let c1 = ScatterCoreset::from_samples(x1.as_view()).unwrap();
        let c2 = ScatterCoreset::from_samples(x2.as_view()).unwrap();
        let core = csp_from_coresets(&c1, &c2, &opts).unwrap();
        let rel = (core.eigenvalues() - batch.eigenvalues()).norm() / batch.eigenvalues().norm();
        prop_assert!(rel <= 1e-9);
        let r_batch = objective(&batch.top_filter(), x1.as_view(), x2.as_view());
        let r_core = objective(&core.top_filter(), x1.as_view(), x2.as_view());
        prop_assert!((r_core / r_batch - 1.0).abs() <= 1e-9);
    }
}
