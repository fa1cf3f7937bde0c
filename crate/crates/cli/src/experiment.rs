//! Repeated train/test protocol, sweeps and result tables.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;
use ttda_core::{evaluate, select_lambda, Dataset, LambdaSearch};

use crate::config::{ExperimentConfig, LambdaSpec, Method, RankSpec};
use crate::dataset::load_dataset;
use crate::error::{CliError, CliResult};
use crate::methods::{resolve_ranks, train, Ranks, TraceRow, Trained};

pub const RESULTS_HEADER: [&str; 9] =
    ["method", "tau", "ranks", "lambda", "storage_norm", "accuracy_mean", "accuracy_std", "train_seconds", "seed"];

/// One results-CSV row. `tau` is empty for explicit ranks and `lambda` for
/// methods without one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub method: String,
    pub tau: Option<f64>,
    pub ranks: String,
    pub lambda: Option<f64>,
    pub storage_norm: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub train_seconds: f64,
    pub seed: u64,
}

impl ResultRow {
    /// Row for a grid point that failed.
    pub fn failed(cfg: &ExperimentConfig) -> Self {
        Self {
            method: cfg.method.to_string(),
            tau: cfg.ranks.tau(),
            ranks: String::new(),
            lambda: None,
            storage_norm: f64::NAN,
            accuracy_mean: f64::NAN,
            accuracy_std: f64::NAN,
            train_seconds: f64::NAN,
            seed: cfg.seed,
        }
    }
}

/// Everything one repeat produced.
#[derive(Clone, Debug)]
pub struct RepeatResult {
    pub ranks: Ranks,
    pub lambda: f64,
    pub trained: Trained,
    pub accuracy: f64,
    pub storage_norm: f64,
    pub train_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub row: ResultRow,
    pub repeats: Vec<RepeatResult>,
    /// Validation accuracy per λ when λ was selected automatically.
    pub lambda_scores: Vec<(f64, f64)>,
}

impl RunOutcome {
    pub fn trace(&self) -> &[TraceRow] {
        &self.repeats[0].trained.trace
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// λ for the run: fixed, or chosen on the first split by validating on
/// held-out subsets of its test part.
pub fn choose_lambda(
    cfg: &ExperimentConfig,
    train_set: &Dataset,
    pool: &Dataset,
    ranks: &Ranks,
) -> CliResult<(f64, Vec<(f64, f64)>)> {
    if !cfg.method.uses_lambda() {
        return Ok((0.0, Vec::new()));
    }
    match cfg.lambda {
        LambdaSpec::Fixed(l) => Ok((l, Vec::new())),
        LambdaSpec::Auto => {
            let search = LambdaSearch {
                grid: cfg.lambda_grid.clone(),
                subset_size: cfg.lambda_subset,
                trials: cfg.lambda_trials,
                seed: cfg.seed,
            };
            let sel = select_lambda(train_set, pool, &search, |d, l| {
                train(cfg, d, ranks, l).map(|t| t.model).map_err(|e| match e {
                    CliError::Core(c) => c,
                    other => ttda_core::Error::InvalidParameter(other.to_string()),
                })
            })?;
            info!("{}: selected λ = {}", cfg.method, sel.lambda);
            Ok((sel.lambda, sel.scores))
        }
    }
}

/// Split seed of repeat `r`.
pub fn split_seed(cfg: &ExperimentConfig, r: usize) -> u64 {
    cfg.seed.wrapping_add(r as u64)
}

/// Runs `cfg.repeats` random stratified splits on `data`. Ranks and λ are
/// fixed on the first split and reused.
pub fn run_on(cfg: &ExperimentConfig, data: &Dataset) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let mut repeats = Vec::with_capacity(cfg.repeats);
    let mut fixed: Option<(Ranks, f64)> = None;
    let mut lambda_scores = Vec::new();
    for r in 0..cfg.repeats {
        let (train_set, test_set) = data.stratified_split(cfg.train_fraction, split_seed(cfg, r))?;
        let (ranks, lambda) = match &fixed {
            Some(f) => f.clone(),
            None => {
                let ranks = resolve_ranks(cfg, &train_set)?;
                let (lambda, scores) = choose_lambda(cfg, &train_set, &test_set, &ranks)?;
                lambda_scores = scores;
                fixed = Some((ranks.clone(), lambda));
                (ranks, lambda)
            }
        };
        let start = Instant::now();
        let trained = train(cfg, &train_set, &ranks, lambda)?;
        let train_seconds = start.elapsed().as_secs_f64();
        let accuracy = evaluate(&trained.model, &train_set, &test_set)?;
        let storage_norm = trained.model.normalized_storage(train_set.len(), data.shape());
        info!(
            "{} repeat {r}: ranks {} λ {lambda} accuracy {accuracy:.4} storage {storage_norm:.4} ({train_seconds:.3}s)",
            cfg.method,
            ranks.label()
        );
        repeats.push(RepeatResult { ranks, lambda, trained, accuracy, storage_norm, train_seconds });
    }
    let acc: Vec<f64> = repeats.iter().map(|r| r.accuracy).collect();
    let (accuracy_mean, accuracy_std) = mean_std(&acc);
    let n = repeats.len() as f64;
    let row = ResultRow {
        method: cfg.method.to_string(),
        tau: cfg.ranks.tau(),
        ranks: repeats[0].ranks.label(),
        lambda: cfg.method.uses_lambda().then_some(repeats[0].lambda),
        storage_norm: repeats.iter().map(|r| r.storage_norm).sum::<f64>() / n,
        accuracy_mean,
        accuracy_std,
        train_seconds: repeats.iter().map(|r| r.train_seconds).sum::<f64>() / n,
        seed: cfg.seed,
    };
    Ok(RunOutcome { row, repeats, lambda_scores })
}

pub fn run(cfg: &ExperimentConfig) -> CliResult<RunOutcome> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    run_on(cfg, &data)
}

/// One sweep grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub method: Method,
    pub ranks: RankSpec,
}

/// Every method crossed with every rank setting, methods outermost.
pub fn grid(methods: &[Method], ranks: &[RankSpec]) -> Vec<SweepPoint> {
    methods.iter().flat_map(|&method| ranks.iter().map(move |r| SweepPoint { method, ranks: r.clone() })).collect()
}

/// Runs every point on one dataset, `workers` at a time (0 = all cores).
/// Rows come back in grid order; a failed point yields a NaN row.
pub fn sweep_on(
    cfg: &ExperimentConfig,
    data: &Dataset,
    points: &[SweepPoint],
    workers: usize,
) -> CliResult<Vec<ResultRow>> {
    let configs: Vec<ExperimentConfig> = points
        .iter()
        .map(|p| {
            let mut c = cfg.clone();
            c.method = p.method;
            c.ranks = p.ranks.clone();
            if c.boundaries.as_ref().is_some_and(|b| c.method.branches() != Some(b.len() + 1)) {
                c.boundaries = None;
            }
            c
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    let rows = pool.install(|| {
        configs
            .par_iter()
            .map(|c| match run_on(c, data) {
                Ok(out) => out.row,
                Err(e) => {
                    error!("{} {:?}: {e}", c.method, c.ranks);
                    ResultRow::failed(c)
                }
            })
            .collect()
    });
    Ok(rows)
}

pub fn sweep(cfg: &ExperimentConfig, points: &[SweepPoint]) -> CliResult<Vec<ResultRow>> {
    let data = load_dataset(cfg)?;
    sweep_on(cfg, &data, points, cfg.workers)
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> CliResult<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(RESULTS_HEADER)?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> CliResult<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    out.write_record(["pass", "branch", "iter", "factor", "objective", "inner_iterations"])?;
    for row in trace {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes rows to `cfg.output`, or stdout when unset.
pub fn emit_results(cfg: &ExperimentConfig, rows: &[ResultRow]) -> CliResult<()> {
    match &cfg.output {
        Some(path) => write_results(std::fs::File::create(path)?, rows),
        None => write_results(std::io::stdout().lock(), rows),
    }
}
