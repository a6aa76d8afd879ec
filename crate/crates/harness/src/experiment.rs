//! tau sweeps over seeded trials, convergence traces, and their output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ttnpe_core::classify::{evaluate, EvalResult};
use ttnpe_core::solver::{fit_prepared, prepare, FitTermination, Prepared, SurrogateStep};
use ttnpe_core::tt::{RankReduction, StorageCount};
use ttnpe_core::{AffinityConfig, SolverConfig, SolverReport, TtChain, Variant};

use crate::config::ExperimentConfig;
use crate::data::{add_noise_with_power, signal_power, split_per_class, Dataset};
use crate::error::{HarnessError, Result};

/// Train and test sets of one seeded trial.
#[derive(Clone, Debug)]
pub struct TrialData {
    pub train: DMatrix<f64>,
    pub train_labels: Vec<i64>,
    pub test: DMatrix<f64>,
    pub test_labels: Vec<i64>,
}

fn trial_rng(seed: u64, trial: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
    rng.set_stream(stream);
    rng
}

/// Per-class split seeded by `seed + trial`; with `snr_db`, both sets get noise
/// whose variance is set from the power of the selected samples.
pub fn trial_data(ds: &Dataset, cfg: &ExperimentConfig, seed: u64, trial: usize, snr: Option<(usize, f64)>) -> Result<TrialData> {
    let mut rng = trial_rng(seed, trial, 0);
    let (tr, te) = split_per_class(&ds.labels, cfg.n_train_per_class, cfg.n_test_per_class, &mut rng)?;
    let train = ds.select(&tr);
    let test = ds.select(&te);
    let (train_m, test_m) = match snr {
        None => (train.data, test.data),
        Some((idx, db)) => {
            let all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            let power = signal_power(&ds.data.select_columns(&all));
            let mut noise = trial_rng(seed, trial, 1 + idx as u64);
            (
                add_noise_with_power(&train.data, power, db, &mut noise)?,
                add_noise_with_power(&test.data, power, db, &mut noise)?,
            )
        }
    };
    Ok(TrialData {
        train: train_m,
        train_labels: train.labels,
        test: test_m,
        test_labels: test.labels,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub ranks: Vec<usize>,
    pub rho: f64,
    pub error_rate: f64,
    pub errors: usize,
    pub n_test: usize,
    pub storage: StorageCount,
    pub epsilon: f64,
    pub initial_objective: f64,
    pub objective_trace: Vec<f64>,
    pub ky_fan_bound: f64,
    pub sweeps_run: usize,
    pub termination: FitTermination,
    pub rank_reductions: Vec<RankReduction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub snr_db: Option<f64>,
    pub tau: f64,
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<CellMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Raw-vector KNN on the same split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub snr_db: Option<f64>,
    pub trial: usize,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub snr_db: Option<f64>,
    /// `None` for the raw-KNN baseline.
    pub tau: Option<f64>,
    pub n_ok: usize,
    pub error_mean: Option<f64>,
    pub error_sd: Option<f64>,
    pub rho_mean: Option<f64>,
    pub rho_sd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: Variant,
    pub reshape: Vec<usize>,
    pub k_graph: usize,
    pub k_classify: usize,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub seed: u64,
    pub records: Vec<CellRecord>,
    pub baselines: Vec<BaselineRecord>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub snr_db: Option<f64>,
    pub tau: Option<f64>,
    pub trial: usize,
    /// Graph, eigendecomposition, initialization and sweeps.
    pub subspace_learning_seconds: f64,
    pub embedding_seconds: f64,
    pub classification_seconds: f64,
}

/// Wall-clock data kept apart from the report so that reports are reproducible byte for byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub cells: Vec<CellTiming>,
    pub total_seconds: f64,
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

struct TrialOutput {
    cells: Vec<(CellRecord, CellTiming)>,
    baseline: (BaselineRecord, CellTiming),
}

fn solver_config(cfg: &ExperimentConfig, variant: Variant, tau: f64) -> SolverConfig {
    let mut s = SolverConfig::new(variant, tau);
    s.max_sweeps = cfg.max_sweeps;
    s
}

fn graph_config(cfg: &ExperimentConfig) -> Result<AffinityConfig> {
    Ok(AffinityConfig {
        k_neighbors: cfg.k_graph,
        epsilon: cfg.epsilon.resolve()?,
    })
}

fn fit_and_evaluate(prep: &Prepared, td: &TrialData, cfg: &ExperimentConfig, variant: Variant, tau: f64) -> Result<(CellMetrics, CellTiming)> {
    let (chain, rep) = fit_prepared(prep, &solver_config(cfg, variant, tau))?;
    let ev = evaluate(Some(&chain), &td.train, &td.train_labels, &td.test, &td.test_labels, cfg.k_classify())?;
    let metrics = CellMetrics {
        ranks: rep.ranks.clone(),
        rho: ev.rho,
        error_rate: ev.error_rate,
        errors: ev.errors,
        n_test: ev.n_test,
        storage: ev.storage.clone().expect("chain evaluation has storage"),
        epsilon: rep.epsilon,
        initial_objective: rep.initial_objective,
        objective_trace: rep.objective_trace.clone(),
        ky_fan_bound: rep.ky_fan_bound,
        sweeps_run: rep.sweeps_run,
        termination: rep.termination,
        rank_reductions: rep.rank_reductions.clone(),
    };
    let timing = CellTiming {
        subspace_learning_seconds: rep.timings.total(),
        embedding_seconds: ev.embed_seconds,
        classification_seconds: ev.classify_seconds,
        ..Default::default()
    };
    Ok((metrics, timing))
}

fn run_trial(ds: &Dataset, cfg: &ExperimentConfig, variant: Variant, seed: u64, trial: usize, snr: Option<(usize, f64)>) -> TrialOutput {
    let snr_db = snr.map(|s| s.1);
    let stamp = |tau: Option<f64>, mut t: CellTiming| {
        t.snr_db = snr_db;
        t.tau = tau;
        t.trial = trial;
        t
    };
    let td = match trial_data(ds, cfg, seed, trial, snr) {
        Ok(td) => td,
        Err(e) => {
            let msg = e.to_string();
            return TrialOutput {
                cells: cfg
                    .tau_list
                    .iter()
                    .map(|&tau| {
                        (
                            CellRecord { snr_db, tau, trial, metrics: None, error: Some(msg.clone()) },
                            stamp(Some(tau), CellTiming::default()),
                        )
                    })
                    .collect(),
                baseline: (
                    BaselineRecord { snr_db, trial, rho: 1.0, error_rate: None, error: Some(msg.clone()) },
                    stamp(None, CellTiming::default()),
                ),
            };
        }
    };

    let baseline = match evaluate(None, &td.train, &td.train_labels, &td.test, &td.test_labels, cfg.k_classify()) {
        Ok(ev) => (
            BaselineRecord { snr_db, trial, rho: 1.0, error_rate: Some(ev.error_rate), error: None },
            stamp(None, CellTiming { classification_seconds: ev.classify_seconds, ..Default::default() }),
        ),
        Err(e) => (
            BaselineRecord { snr_db, trial, rho: 1.0, error_rate: None, error: Some(e.to_string()) },
            stamp(None, CellTiming::default()),
        ),
    };

    let prepared = graph_config(cfg).and_then(|g| Ok(prepare(td.train.clone(), &cfg.reshape, &g)?));
    let cells = cfg
        .tau_list
        .par_iter()
        .map(|&tau| {
            let out = match &prepared {
                Ok(prep) => fit_and_evaluate(prep, &td, cfg, variant, tau),
                Err(e) => Err(HarnessError::Data(e.to_string())),
            };
            match out {
                Ok((m, t)) => (CellRecord { snr_db, tau, trial, metrics: Some(m), error: None }, stamp(Some(tau), t)),
                Err(e) => {
                    log::warn!("tau {tau}, trial {trial}: {e}");
                    (
                        CellRecord { snr_db, tau, trial, metrics: None, error: Some(e.to_string()) },
                        stamp(Some(tau), CellTiming::default()),
                    )
                }
            }
        })
        .collect();
    TrialOutput { cells, baseline }
}

/// Overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub threads: Option<usize>,
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Every `(snr, trial, tau)` cell on an already loaded dataset.
pub fn run_experiment_on(ds: &Dataset, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(RunReport, TimingReport)> {
    let start = Instant::now();
    let seed = opts.seed.unwrap_or(cfg.seed);
    let variant = opts.variant.unwrap_or(cfg.variant);
    let snrs: Vec<Option<(usize, f64)>> = match &cfg.noise_snr_db {
        None => vec![None],
        Some(v) => v.iter().copied().enumerate().map(Some).collect(),
    };
    let jobs: Vec<(Option<(usize, f64)>, usize)> =
        snrs.iter().flat_map(|&s| (0..cfg.trials).map(move |t| (s, t))).collect();
    let outputs: Vec<TrialOutput> = in_pool(opts.threads, || {
        jobs.par_iter()
            .map(|&(snr, trial)| run_trial(ds, cfg, variant, seed, trial, snr))
            .collect()
    })?;

    let mut records = Vec::new();
    let mut baselines = Vec::new();
    let mut timing = TimingReport::default();
    for out in outputs {
        for (rec, t) in out.cells {
            records.push(rec);
            timing.cells.push(t);
        }
        baselines.push(out.baseline.0);
        timing.cells.push(out.baseline.1);
    }

    let mut aggregates = Vec::new();
    for snr in &snrs {
        let snr_db = snr.map(|s| s.1);
        let errs: Vec<f64> = baselines.iter().filter(|b| b.snr_db == snr_db).filter_map(|b| b.error_rate).collect();
        let (error_mean, error_sd) = mean_sd(&errs);
        aggregates.push(Aggregate {
            snr_db,
            tau: None,
            n_ok: errs.len(),
            error_mean,
            error_sd,
            rho_mean: Some(1.0),
            rho_sd: None,
        });
        for &tau in &cfg.tau_list {
            let ok: Vec<&CellMetrics> = records
                .iter()
                .filter(|r| r.snr_db == snr_db && r.tau == tau)
                .filter_map(|r| r.metrics.as_ref())
                .collect();
            let (error_mean, error_sd) = mean_sd(&ok.iter().map(|m| m.error_rate).collect::<Vec<_>>());
            let (rho_mean, rho_sd) = mean_sd(&ok.iter().map(|m| m.rho).collect::<Vec<_>>());
            aggregates.push(Aggregate {
                snr_db,
                tau: Some(tau),
                n_ok: ok.len(),
                error_mean,
                error_sd,
                rho_mean,
                rho_sd,
            });
        }
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    let report = RunReport {
        variant,
        reshape: cfg.reshape.clone(),
        k_graph: cfg.k_graph,
        k_classify: cfg.k_classify(),
        n_train_per_class: cfg.n_train_per_class,
        n_test_per_class: cfg.n_test_per_class,
        seed,
        records,
        baselines,
        aggregates,
    };
    Ok((report, timing))
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(RunReport, TimingReport)> {
    let ds = cfg.load_dataset()?;
    run_experiment_on(&ds, cfg, opts)
}

/// `report.json` -> `report.csv`, `report.timing.json`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value).map_err(ttnpe_core::Error::from)?;
    s.push(b'\n');
    Ok(s)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flat `snr_db,tau,trial,rho,error` rows; baseline rows leave `tau` empty.
pub fn report_csv(report: &RunReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Data(format!("csv: {e}"));
    w.write_record(["snr_db", "tau", "trial", "rho", "error"]).map_err(csv_err)?;
    for b in &report.baselines {
        w.write_record([fmt_opt(b.snr_db), String::new(), b.trial.to_string(), b.rho.to_string(), fmt_opt(b.error_rate)])
            .map_err(csv_err)?;
    }
    for r in &report.records {
        let (rho, err) = r.metrics.as_ref().map_or((None, None), |m| (Some(m.rho), Some(m.error_rate)));
        w.write_record([fmt_opt(r.snr_db), r.tau.to_string(), r.trial.to_string(), fmt_opt(rho), fmt_opt(err)])
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Data(format!("csv: {e}")))
}

/// Writes the report, its CSV and the timing sidecar; returns the three paths.
pub fn write_experiment(path: &Path, report: &RunReport, timing: &TimingReport) -> Result<[PathBuf; 3]> {
    let csv_path = sibling(path, ".csv");
    let timing_path = sibling(path, ".timing.json");
    write_file(path, &to_json(report)?)?;
    write_file(&csv_path, &report_csv(report)?)?;
    write_file(&timing_path, &to_json(timing)?)?;
    Ok([path.to_path_buf(), csv_path, timing_path])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRun {
    pub variant: Variant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    pub initial_objective: Option<f64>,
    pub objective_trace: Vec<f64>,
    pub ky_fan_bound: Option<f64>,
    pub bound_satisfied: bool,
    pub surrogate_trace: Vec<SurrogateStep>,
    /// Every per-core surrogate update was non-increasing (ATN only).
    pub surrogate_monotone: bool,
    pub core_change_trace: Vec<f64>,
    pub sweeps_run: usize,
    pub termination: Option<FitTermination>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_samples: usize,
    pub reshape: Vec<usize>,
    pub tau: f64,
    pub runs: Vec<ConvergenceRun>,
}

fn convergence_run(prep: &Prepared, cfg: &ExperimentConfig, variant: Variant, tau: f64) -> ConvergenceRun {
    let t0 = Instant::now();
    match fit_prepared(prep, &solver_config(cfg, variant, tau)) {
        Ok((_, rep)) => convergence_from_report(rep, t0.elapsed().as_secs_f64()),
        Err(e) => ConvergenceRun {
            variant,
            error: Some(e.to_string()),
            ranks: None,
            initial_objective: None,
            objective_trace: Vec::new(),
            ky_fan_bound: None,
            bound_satisfied: false,
            surrogate_trace: Vec::new(),
            surrogate_monotone: false,
            core_change_trace: Vec::new(),
            sweeps_run: 0,
            termination: None,
            seconds: t0.elapsed().as_secs_f64(),
        },
    }
}

fn convergence_from_report(rep: SolverReport, seconds: f64) -> ConvergenceRun {
    let tol = |b: f64| 1e-8 * (1.0 + b.abs());
    let bound_satisfied = rep.objective_trace.iter().all(|&o| o >= rep.ky_fan_bound - tol(rep.ky_fan_bound));
    let surrogate_monotone = rep.surrogate_trace.iter().all(|s| s.after <= s.before + 1e-12 * (1.0 + s.before));
    ConvergenceRun {
        variant: rep.variant,
        error: None,
        ranks: Some(rep.ranks),
        initial_objective: Some(rep.initial_objective),
        objective_trace: rep.objective_trace,
        ky_fan_bound: Some(rep.ky_fan_bound),
        bound_satisfied,
        surrogate_trace: rep.surrogate_trace,
        surrogate_monotone,
        core_change_trace: rep.core_change_trace,
        sweeps_run: rep.sweeps_run,
        termination: Some(rep.termination),
        seconds,
    }
}

/// Fits each variant on the trial-0 training set with the first tau and records its traces.
/// A variant that fails (for instance on the TN memory budget) is recorded, not fatal.
pub fn run_convergence_on(ds: &Dataset, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let td = trial_data(ds, cfg, seed, 0, None)?;
    let tau = cfg.tau_list[0];
    let n_samples = td.train.ncols();
    let prep = prepare(td.train, &cfg.reshape, &graph_config(cfg)?)?;
    let variants = match opts.variant {
        Some(v) => vec![v],
        None => vec![Variant::Tn, Variant::Atn],
    };
    let runs = in_pool(opts.threads, || {
        variants.par_iter().map(|&v| convergence_run(&prep, cfg, v, tau)).collect()
    })?;
    Ok(ConvergenceReport {
        n_samples,
        reshape: cfg.reshape.clone(),
        tau,
        runs,
    })
}

pub fn run_convergence(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    let ds = cfg.load_dataset()?;
    run_convergence_on(&ds, cfg, opts)
}

/// Writes the trace document plus a `variant,sweep,objective` CSV (sweep 0 is the initialization).
pub fn write_convergence(path: &Path, report: &ConvergenceReport) -> Result<[PathBuf; 3]> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Data(format!("csv: {e}"));
    w.write_record(["variant", "sweep", "objective"]).map_err(csv_err)?;
    for run in &report.runs {
        let name = match run.variant {
            Variant::Tn => "tn",
            Variant::Atn => "atn",
        };
        let values = run.initial_objective.into_iter().chain(run.objective_trace.iter().copied());
        for (s, o) in values.enumerate() {
            w.write_record([name.to_string(), s.to_string(), o.to_string()]).map_err(csv_err)?;
        }
    }
    let csv_bytes = w.into_inner().map_err(|e| HarnessError::Data(format!("csv: {e}")))?;
    let timing: Vec<serde_json::Value> = report
        .runs
        .iter()
        .map(|r| serde_json::json!({"variant": r.variant, "seconds": r.seconds}))
        .collect();
    let csv_path = sibling(path, ".csv");
    let timing_path = sibling(path, ".timing.json");
    write_file(path, &to_json(report)?)?;
    write_file(&csv_path, &csv_bytes)?;
    write_file(&timing_path, &to_json(&timing)?)?;
    Ok([path.to_path_buf(), csv_path, timing_path])
}

/// Fits one model on the trial-0 training split with the first tau.
pub fn fit_model(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(TtChain, SolverReport, f64)> {
    let ds = cfg.load_dataset()?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let td = trial_data(&ds, cfg, seed, 0, None)?;
    let prep = prepare(td.train, &cfg.reshape, &graph_config(cfg)?)?;
    let tau = cfg.tau_list[0];
    let (chain, rep) = fit_prepared(&prep, &solver_config(cfg, opts.variant.unwrap_or(cfg.variant), tau))?;
    Ok((chain, rep, tau))
}

/// Classifies the trial-0 test split with a stored model.
pub fn classify_with_model(cfg: &ExperimentConfig, chain: &TtChain, opts: &RunOptions) -> Result<EvalResult> {
    check_model_shape(cfg, chain)?;
    let ds = cfg.load_dataset()?;
    let td = trial_data(&ds, cfg, opts.seed.unwrap_or(cfg.seed), 0, None)?;
    Ok(evaluate(Some(chain), &td.train, &td.train_labels, &td.test, &td.test_labels, cfg.k_classify())?)
}

/// Embeds every sample of the (class-filtered) dataset: `label,t_1,...,t_R` rows.
pub fn embed_csv(cfg: &ExperimentConfig, chain: &TtChain) -> Result<Vec<u8>> {
    check_model_shape(cfg, chain)?;
    let ds = cfg.load_dataset()?;
    let t = ttnpe_core::tt::project_columns(chain, &ds.data)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Data(format!("csv: {e}"));
    let mut header = vec!["label".to_string()];
    header.extend((1..=t.nrows()).map(|r| format!("t{r}")));
    w.write_record(&header).map_err(csv_err)?;
    for (j, &label) in ds.labels.iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend(t.column(j).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::Data(format!("csv: {e}")))
}

fn check_model_shape(cfg: &ExperimentConfig, chain: &TtChain) -> Result<()> {
    if chain.mode_dims() != cfg.reshape {
        return Err(HarnessError::Config(format!(
            "model modes {:?} differ from config reshape {:?}",
            chain.mode_dims(),
            cfg.reshape
        )));
    }
    Ok(())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes)
}
