mod common;

use ttnpe_core::Variant;
use ttnpe_harness::data::load_idx;
use ttnpe_harness::experiment::{report_csv, run_convergence_on, run_experiment_on, to_json, trial_data};
use ttnpe_harness::{ExperimentConfig, RunOptions};

#[test]
fn idx_fixture_loads_scaled() {
    let (dir, _) = common::fixture("");
    let ds = load_idx(&dir.path().join("images.idx"), &dir.path().join("labels.idx")).unwrap();
    assert_eq!(ds.len(), 42);
    assert_eq!(ds.dim(), 36);
    assert_eq!(ds.sample_dims, vec![6, 6]);
    assert!(ds.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    assert_eq!(ds.class_counts().values().copied().collect::<Vec<_>>(), vec![14, 14, 14]);
}

#[test]
fn experiment_is_deterministic_across_thread_counts() {
    let (_dir, path) = common::fixture(r#", "noise_snr_db": [10.0, 20.0]"#);
    let cfg = ExperimentConfig::load(&path).unwrap();
    let ds = cfg.load_dataset().unwrap();
    let one = RunOptions { threads: Some(1), ..Default::default() };
    let two = RunOptions { threads: Some(2), ..Default::default() };
    let (a, _) = run_experiment_on(&ds, &cfg, &one).unwrap();
    let (b, _) = run_experiment_on(&ds, &cfg, &two).unwrap();
    assert_eq!(to_json(&a).unwrap(), to_json(&b).unwrap());
    assert_eq!(report_csv(&a).unwrap(), report_csv(&b).unwrap());

    // 2 snr x 2 trials x 2 tau, plus one baseline per (snr, trial)
    assert_eq!(a.records.len(), 8);
    assert_eq!(a.baselines.len(), 4);
    assert_eq!(a.aggregates.len(), 2 * 3);
    assert!(a.records.iter().all(|r| r.error.is_none()));
    for r in &a.records {
        let m = r.metrics.as_ref().unwrap();
        assert_eq!(m.n_test, 12);
        assert!(m.rho > 0.0 && m.rho.is_finite());
    }
    let csv = String::from_utf8(report_csv(&a).unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 + 4);
    assert!(csv.starts_with("snr_db,tau,trial,rho,error\n"));

    let other = RunOptions { seed: Some(12), ..Default::default() };
    let (c, _) = run_experiment_on(&ds, &cfg, &other).unwrap();
    assert_ne!(to_json(&a).unwrap(), to_json(&c).unwrap());
}

#[test]
fn smaller_tau_keeps_larger_subspace() {
    let (_dir, path) = common::fixture("");
    let cfg = ExperimentConfig::load(&path).unwrap();
    let ds = cfg.load_dataset().unwrap();
    let (rep, _) = run_experiment_on(&ds, &cfg, &RunOptions::default()).unwrap();
    for trial in 0..2 {
        let rho = |tau: f64| {
            rep.records.iter().find(|r| r.trial == trial && r.tau == tau).unwrap().metrics.as_ref().unwrap().rho
        };
        assert!(rho(0.5) >= rho(0.9));
    }
}

#[test]
fn trial_split_is_per_class_and_disjoint() {
    let (_dir, path) = common::fixture("");
    let cfg = ExperimentConfig::load(&path).unwrap();
    let ds = cfg.load_dataset().unwrap();
    let td = trial_data(&ds, &cfg, 3, 1, None).unwrap();
    assert_eq!(td.train.ncols(), 24);
    assert_eq!(td.test.ncols(), 12);
    for c in 0..3 {
        assert_eq!(td.train_labels.iter().filter(|&&l| l == c).count(), 8);
        assert_eq!(td.test_labels.iter().filter(|&&l| l == c).count(), 4);
    }
    for tc in td.test.column_iter() {
        assert!(td.train.column_iter().all(|tr| tr != tc));
    }
    let again = trial_data(&ds, &cfg, 3, 1, None).unwrap();
    assert_eq!(td.train, again.train);
    let noisy = trial_data(&ds, &cfg, 3, 1, Some((0, 5.0))).unwrap();
    assert_eq!(noisy.train_labels, td.train_labels);
    assert_ne!(noisy.train, td.train);
}

#[test]
fn convergence_traces_both_variants() {
    let (_dir, path) = common::fixture("");
    let cfg = ExperimentConfig::load(&path).unwrap();
    let ds = cfg.load_dataset().unwrap();
    let rep = run_convergence_on(&ds, &cfg, &RunOptions::default()).unwrap();
    assert_eq!(rep.n_samples, 24);
    assert_eq!(rep.runs.len(), 2);
    assert_eq!(rep.runs[0].variant, Variant::Tn);
    for run in &rep.runs {
        assert!(run.error.is_none(), "{:?}", run.error);
        assert!(run.bound_satisfied);
        assert_eq!(run.objective_trace.len(), run.sweeps_run);
    }
    let tn = &rep.runs[0];
    let mut prev = tn.initial_objective.unwrap();
    for &o in &tn.objective_trace {
        assert!(o <= prev + 1e-9 * (1.0 + prev.abs()));
        prev = o;
    }
    assert!(rep.runs[1].surrogate_monotone);
}

#[test]
fn class_filter_and_reshape_mismatch() {
    let (_dir, path) = common::fixture(r#", "class_filter": [0, 2]"#);
    let cfg = ExperimentConfig::load(&path).unwrap();
    let ds = cfg.load_dataset().unwrap();
    assert_eq!(ds.len(), 28);
    assert!(ds.labels.iter().all(|&l| l != 1));

    let mut bad = cfg.clone();
    bad.reshape = vec![5, 7];
    let err = bad.load_dataset().unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
