use bgn::agent::AgentVariant;
use bgn::bench::{
    moving_average, normalized_return, run_experiment, summarize_dir, ExistingRuns, ExperimentSpec, Manifest, DONE_FILE, MANIFEST_FILE,
};
use bgn::trainer::{TrainConfig, LOG_FILE};
use proptest::prelude::*;

proptest! {
    #[test]
    fn moving_average_commutes_with_affine_maps(
        series in prop::collection::vec(-10.0..10.0f64, 1..60),
        window in 1usize..20,
        shift in -5.0..5.0f64,
        scale in 0.1..4.0f64,
    ) {
        let base = moving_average(&series, window);
        let mapped: Vec<f64> = series.iter().map(|x| scale * x + shift).collect();
        for (m, b) in moving_average(&mapped, window).iter().zip(&base) {
            prop_assert!((m - (scale * b + shift)).abs() <= 1e-9);
        }
    }

    #[test]
    fn moving_average_matches_window_mean(series in prop::collection::vec(-10.0..10.0f64, 1..60), window in 1usize..20) {
        let ma = moving_average(&series, window);
        for i in 0..series.len() {
            let lo = (i + 1).saturating_sub(window);
            let want = series[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64;
            prop_assert!((ma[i] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalization_is_invariant_to_a_common_affine_map(
        raw in -100.0..100.0f64,
        sarsop in -100.0..100.0f64,
        random in -100.0..100.0f64,
        shift in -50.0..50.0f64,
        scale in 0.01..10.0f64,
    ) {
        prop_assume!((sarsop - random).abs() > 1e-3);
        let a = normalized_return(raw, sarsop, random).unwrap();
        let b = normalized_return(scale * raw + shift, scale * sarsop + shift, scale * random + shift).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert!(normalized_return(sarsop, sarsop, random).unwrap() == 1.0);
        prop_assert!(normalized_return(random, sarsop, random).unwrap() == 0.0);
    }
}

#[test]
fn equal_references_are_rejected() {
    assert!(normalized_return(1.0, 0.5, 0.5).is_err());
}

fn tiny_spec(out: &std::path::Path) -> ExperimentSpec {
    let base = TrainConfig {
        total_steps: Some(400),
        num_workers: 4,
        sequential: true,
        ..TrainConfig::default()
    };
    ExperimentSpec {
        domain: "toy".into(),
        variants: vec![AgentVariant::Random, AgentVariant::AH_CH],
        seeds: vec![0, 1, 2],
        base,
        out_dir: out.to_path_buf(),
    }
}

#[test]
fn experiment_grid_layout_resume_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_spec(dir.path());
    let first = run_experiment(&spec, ExistingRuns::Keep).unwrap();
    assert_eq!(first.trained.len(), 6);
    for v in &spec.variants {
        for s in &spec.seeds {
            let run = spec.run_dir(*v, *s);
            assert!(run.join(LOG_FILE).exists() && run.join(DONE_FILE).exists(), "{}", run.display());
        }
    }

    let manifest = Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.spec, spec);
    assert_eq!(manifest.runs.len(), 6);
    let copy = dir.path().join("copy.json");
    manifest.write(&copy).unwrap();
    assert_eq!(Manifest::read(&copy).unwrap(), manifest);

    let stamp = |p: &std::path::Path| std::fs::metadata(p.join(LOG_FILE)).unwrap().modified().unwrap();
    let before: Vec<_> = first.trained.iter().map(|p| stamp(p)).collect();
    let again = run_experiment(&spec, ExistingRuns::Keep).unwrap();
    assert!(again.trained.is_empty());
    assert_eq!(again.skipped.len(), 6);
    let after: Vec<_> = first.trained.iter().map(|p| stamp(p)).collect();
    assert_eq!(before, after);

    // an interrupted run blocks Keep and is redone by Resume
    let broken = spec.run_dir(AgentVariant::AH_CH, 1);
    std::fs::remove_file(broken.join(DONE_FILE)).unwrap();
    assert!(run_experiment(&spec, ExistingRuns::Keep).is_err());
    let resumed = run_experiment(&spec, ExistingRuns::Resume).unwrap();
    assert_eq!(resumed.trained, vec![broken]);

    let table = summarize_dir(dir.path()).unwrap();
    assert!(table.missing.is_empty());
    assert_eq!(table.rows.len(), 2);
    for row in &table.rows {
        assert_eq!(row.seeds.len(), 3);
        assert!(row.return_mean.is_finite() && row.return_std >= 0.0);
    }
}

#[test]
fn invalid_experiments_fail_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = tiny_spec(dir.path());
    spec.seeds = vec![1, 1];
    assert!(run_experiment(&spec, ExistingRuns::Keep).is_err());
    let mut spec = tiny_spec(dir.path());
    spec.domain = "no-such-domain".into();
    assert!(run_experiment(&spec, ExistingRuns::Keep).is_err());
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}
