//! Synthetic benchmark runner and real-data pipeline.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use magl_core::datagen::{build_precision_with, sample_with_factor, sampling_factor, GroundTruth};
use magl_core::estimator::{continue_lla, fit_with, sample_covariance};
use magl_core::metrics::{f1_score, frob_error, hamming, mean_std};
use magl_core::select::{bic, lambda_grid, select, LambdaSearch, SelectionConfig, SelectionResult};
use magl_core::{BlockMatrix, FitOptions, GraphEstimate, PenaltyKind, PenaltySpec};

use crate::config::{ExperimentConfig, SelectionMode};
use crate::eig::FaerEigensolver;
use crate::error::{MaglError, Result};
use crate::format::{bic_table_csv, edge_list_tsv, write_json, write_matrix, write_text, MatrixFile};
use crate::ingest::TimeSeriesTable;
use crate::report::{EstimateJson, PenaltyJson};

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the ground truth for run `run`.
pub fn truth_seed(master: u64, run: usize) -> u64 {
    mix_seed(master, run as u64 + 1)
}

/// Seed of the samples for run `run` at sample size `n`.
pub fn sample_seed(master: u64, run: usize, n: usize) -> u64 {
    mix_seed(truth_seed(master, run), n as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub graph: String,
    pub p: usize,
    pub m: usize,
    pub n: usize,
    pub penalty: String,
    pub selection: String,
    pub run: usize,
    pub seed: u64,
    pub lambda: f64,
    pub alpha: f64,
    pub f1: f64,
    pub hamming: usize,
    pub frob_error: f64,
    pub n_edges: usize,
    pub true_edges: usize,
    pub converged: bool,
    pub iterations: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub graph: String,
    pub p: usize,
    pub m: usize,
    pub n: usize,
    pub penalty: String,
    pub selection: String,
    pub runs: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub hamming_mean: f64,
    pub hamming_std: f64,
    pub frob_error_mean: f64,
    pub frob_error_std: f64,
    pub elapsed_seconds_mean: f64,
    pub elapsed_seconds_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub run: usize,
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthReport {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<AggregateRow>,
    pub failures: Vec<RunFailure>,
}

/// One fitted point of the λ path, scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub lambda: f64,
    pub f1: f64,
    pub hamming: usize,
    pub frob_error: f64,
    /// NaN unless BIC selection was requested.
    pub bic: f64,
    pub n_edges: usize,
    pub converged: bool,
    pub iterations: usize,
    pub elapsed_seconds: f64,
}

fn better(mode: SelectionMode, new: &Candidate, cur: &Candidate) -> bool {
    match mode {
        SelectionMode::F1Oracle => new.f1 > cur.f1,
        SelectionMode::Bic => new.bic < cur.bic || (cur.bic.is_nan() && !new.bic.is_nan()),
    }
}

struct Job {
    run: usize,
    n: usize,
}

/// Fits the whole λ grid for every penalty on one data set and keeps, per
/// penalty and selection mode, the best point.
///
/// The grid comes from the lasso screening rule and is shared by all
/// penalties. Lasso is fitted from the largest λ down, each solve
/// warm-started from the previous one. Its solution is the first LLA round
/// of log-sum and SCAD too, so those only pay for the later rounds. The
/// elapsed time of a concave fit counts the shared first round.
pub fn sweep(
    sigma_hat: &BlockMatrix,
    n: usize,
    truth: &GroundTruth,
    cfg: &ExperimentConfig,
) -> Result<BTreeMap<(PenaltyKind, SelectionMode), Candidate>> {
    let eig = FaerEigensolver;
    let grid = lambda_grid(sigma_hat, cfg.alpha, cfg.grid_size, &LambdaSearch::default())?;
    let need_bic = cfg.modes.contains(&SelectionMode::Bic);
    let mut best: BTreeMap<(PenaltyKind, SelectionMode), Candidate> = BTreeMap::new();
    let mut start = None;
    for &lambda in grid.grid.iter().rev() {
        let lasso = PenaltySpec { kind: PenaltyKind::Lasso, lambda, alpha: cfg.alpha, ..cfg.template };
        let t0 = Instant::now();
        let round1 = fit_with(&eig, sigma_hat, &lasso, &cfg.fit, start.take())?;
        let t_round1 = t0.elapsed().as_secs_f64();
        start = round1.warm_start();
        for &kind in &cfg.penalties {
            let (est, elapsed) = if kind.is_concave() {
                let spec = PenaltySpec { kind, ..lasso };
                let t1 = Instant::now();
                let first = round1.solver_results[0].clone();
                let est = continue_lla(&eig, sigma_hat, &spec, &cfg.fit, first)?;
                (est, t_round1 + t1.elapsed().as_secs_f64())
            } else {
                (round1.clone(), t_round1)
            };
            let c = score(&est, lambda, truth, sigma_hat, n, need_bic, elapsed)?;
            for &mode in &cfg.modes {
                match best.get(&(kind, mode)) {
                    Some(cur) if !better(mode, &c, cur) => {}
                    _ => {
                        best.insert((kind, mode), c);
                    }
                }
            }
        }
    }
    Ok(best)
}

fn score(
    est: &GraphEstimate,
    lambda: f64,
    truth: &GroundTruth,
    sigma_hat: &BlockMatrix,
    n: usize,
    need_bic: bool,
    elapsed: f64,
) -> Result<Candidate> {
    Ok(Candidate {
        lambda,
        f1: f1_score(&est.edges, &truth.edges_star),
        hamming: hamming(&est.edges, &truth.edges_star),
        frob_error: frob_error(&est.omega_hat, &truth.omega_star)?,
        bic: if need_bic { bic(sigma_hat, &est.omega_hat, n)? } else { f64::NAN },
        n_edges: est.edges.len(),
        converged: est.converged(),
        iterations: est.iterations(),
        elapsed_seconds: elapsed,
    })
}

/// Ground truth for one run, shared by every sample size.
pub fn run_truth(cfg: &ExperimentConfig, run: usize) -> Result<GroundTruth> {
    let seed = truth_seed(cfg.seed, run);
    let edges = cfg.graph.generate(cfg.p, seed)?;
    let mut truth = build_precision_with(&FaerEigensolver, &edges, cfg.p, cfg.m, seed)?;
    truth.graph_kind = Some(cfg.graph);
    Ok(truth)
}

fn run_job(cfg: &ExperimentConfig, job: &Job) -> Result<Vec<RunRow>> {
    let truth = run_truth(cfg, job.run)?;
    let phi = sampling_factor(&FaerEigensolver, &truth.omega_star)?;
    let seed = sample_seed(cfg.seed, job.run, job.n);
    let data = sample_with_factor(&phi, job.n, seed)?;
    let sigma_hat = sample_covariance(&data, cfg.p, cfg.m)?;
    let picked = sweep(&sigma_hat, job.n, &truth, cfg)?;
    let mut rows = Vec::new();
    for &kind in &cfg.penalties {
        for &mode in &cfg.modes {
            let c = picked[&(kind, mode)];
            rows.push(RunRow {
                graph: cfg.graph.name().to_string(),
                p: cfg.p,
                m: cfg.m,
                n: job.n,
                penalty: kind.name().to_string(),
                selection: mode.name().to_string(),
                run: job.run,
                seed,
                lambda: c.lambda,
                alpha: cfg.alpha,
                f1: c.f1,
                hamming: c.hamming,
                frob_error: c.frob_error,
                n_edges: c.n_edges,
                true_edges: truth.edges_star.len(),
                converged: c.converged,
                iterations: c.iterations,
                elapsed_seconds: c.elapsed_seconds,
            });
        }
    }
    Ok(rows)
}

/// Mean and sample standard deviation (n − 1 denominator) per
/// (graph, n, penalty, selection).
pub fn aggregate(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, usize, String, String), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.graph.clone(), r.n, r.penalty.clone(), r.selection.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((graph, n, penalty, selection), rs)| {
            let stat = |f: &dyn Fn(&RunRow) -> f64| mean_std(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (f1_mean, f1_std) = stat(&|r| r.f1);
            let (hamming_mean, hamming_std) = stat(&|r| r.hamming as f64);
            let (frob_error_mean, frob_error_std) = stat(&|r| r.frob_error);
            let (elapsed_seconds_mean, elapsed_seconds_std) = stat(&|r| r.elapsed_seconds);
            AggregateRow {
                graph,
                p: rs[0].p,
                m: rs[0].m,
                n,
                penalty,
                selection,
                runs: rs.len(),
                f1_mean,
                f1_std,
                hamming_mean,
                hamming_std,
                frob_error_mean,
                frob_error_std,
                elapsed_seconds_mean,
                elapsed_seconds_std,
            }
        })
        .collect()
}

/// Runs every (run, n) pair on a pool of `cfg.jobs` threads. Failed runs are
/// logged and skipped; 20% or more failures abort.
pub fn run_synthetic(cfg: &ExperimentConfig) -> Result<SynthReport> {
    cfg.validate()?;
    let jobs: Vec<Job> = (0..cfg.runs).flat_map(|run| cfg.n_list.iter().map(move |&n| Job { run, n })).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| MaglError::Usage(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<RunRow>>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let t = Instant::now();
                let r = run_job(cfg, job);
                info!("run {} n={} done in {:.1}s", job.run, job.n, t.elapsed().as_secs_f64());
                r
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(rs) => rows.extend(rs),
            Err(e) => {
                warn!("run {} n={} failed: {e}", job.run, job.n);
                failures.push(RunFailure { run: job.run, n: job.n, error: e.to_string() });
            }
        }
    }
    if failures.len() * 5 >= jobs.len() && !failures.is_empty() {
        return Err(MaglError::TooManyFailures { failed: failures.len(), total: jobs.len() });
    }
    rows.sort_by(|a, b| {
        (a.n, &a.penalty, &a.selection, a.run).cmp(&(b.n, &b.penalty, &b.selection, b.run))
    });
    let aggregates = aggregate(&rows);
    Ok(SynthReport { rows, aggregates, failures })
}

fn csv_string<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| MaglError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub const RUN_COLUMNS: [&str; 18] = [
    "graph", "p", "m", "n", "penalty", "selection", "run", "seed", "lambda", "alpha", "f1", "hamming",
    "frob_error", "n_edges", "true_edges", "converged", "iterations", "elapsed_seconds",
];

pub const AGGREGATE_COLUMNS: [&str; 15] = [
    "graph", "p", "m", "n", "penalty", "selection", "runs", "f1_mean", "f1_std", "hamming_mean",
    "hamming_std", "frob_error_mean", "frob_error_std", "elapsed_seconds_mean", "elapsed_seconds_std",
];

pub fn metrics_csv(rows: &[RunRow]) -> Result<String> {
    csv_string(rows, &RUN_COLUMNS)
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<String> {
    csv_string(rows, &AGGREGATE_COLUMNS)
}

#[derive(Serialize)]
struct SynthSummary<'a> {
    graph: &'a str,
    p: usize,
    m: usize,
    n_list: &'a [usize],
    runs: usize,
    seed: u64,
    alpha: f64,
    grid_size: usize,
    penalties: Vec<&'static str>,
    selection: Vec<&'static str>,
    failures: &'a [RunFailure],
    aggregates: &'a [AggregateRow],
}

/// Writes `metrics.csv`, `aggregate.csv` and `summary.json`.
pub fn write_synthetic(report: &SynthReport, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    write_text(&dir.join("metrics.csv"), &metrics_csv(&report.rows)?)?;
    write_text(&dir.join("aggregate.csv"), &aggregate_csv(&report.aggregates)?)?;
    let summary = SynthSummary {
        graph: cfg.graph.name(),
        p: cfg.p,
        m: cfg.m,
        n_list: &cfg.n_list,
        runs: cfg.runs,
        seed: cfg.seed,
        alpha: cfg.alpha,
        grid_size: cfg.grid_size,
        penalties: cfg.penalties.iter().map(|k| k.name()).collect(),
        selection: cfg.modes.iter().map(|m| m.name()).collect(),
        failures: &report.failures,
        aggregates: &report.aggregates,
    };
    write_json(&dir.join("summary.json"), &summary)
}

#[derive(Debug, Clone)]
pub struct RealConfig {
    pub selection: SelectionConfig,
    pub fit: FitOptions,
    /// ε and a for the concave penalties.
    pub template: PenaltySpec,
}

impl Default for RealConfig {
    fn default() -> Self {
        RealConfig {
            selection: SelectionConfig::real_data(),
            fit: FitOptions::default(),
            template: PenaltySpec::lasso(1.0, SelectionConfig::real_data().phase_one_alpha),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RealResult {
    /// The penalty at the selected (λ, α).
    pub spec: PenaltySpec,
    pub selection: SelectionResult,
}

#[derive(Serialize)]
struct RealSummaryEntry {
    #[serde(flatten)]
    penalty: PenaltyJson,
    n_edges: usize,
    lambda_sm: f64,
    lambda_lower: f64,
    lambda_upper: f64,
    bic: f64,
    converged: bool,
}

#[derive(Serialize)]
struct RealSummary<'a> {
    p: usize,
    m: usize,
    n: usize,
    entities: &'a [String],
    features: &'a [String],
    dropped_rows: usize,
    penalties: Vec<RealSummaryEntry>,
}

/// BIC-selected fit per penalty on a return table.
pub fn run_real(table: &TimeSeriesTable, penalties: &[PenaltyKind], cfg: &RealConfig) -> Result<Vec<RealResult>> {
    if penalties.is_empty() {
        return Ok(Vec::new());
    }
    let sigma_hat = sample_covariance(&table.values, table.p(), table.m())?;
    penalties
        .iter()
        .map(|&kind| {
            let template = PenaltySpec { kind, ..cfg.template };
            let selection = select(&FaerEigensolver, &sigma_hat, table.n(), &template, &cfg.fit, &cfg.selection)?;
            info!(
                "{}: lambda={:.4} alpha={} edges={}",
                kind.name(),
                selection.best_lambda,
                selection.best_alpha,
                selection.best.edges.len()
            );
            let spec = template.with_lambda(selection.best_lambda).with_alpha(selection.best_alpha);
            Ok(RealResult { spec, selection })
        })
        .collect()
}

/// Per penalty `<name>/edges.tsv`, `omega.csv`, `bic_table.csv` and
/// `estimate.json`, plus a top-level `summary.json`. Writes nothing for an
/// empty result list.
pub fn write_real(results: &[RealResult], table: &TimeSeriesTable, groups: Option<&[String]>, dir: &Path) -> Result<()> {
    if results.is_empty() {
        return Ok(());
    }
    let mut entries = Vec::new();
    for r in results {
        let sel = &r.selection;
        let sub = dir.join(r.spec.kind.name());
        let spec = r.spec;
        let est = &sel.best;
        write_text(&sub.join("edges.tsv"), &edge_list_tsv(&est.edges, &est.omega_hat, Some(&table.entities), groups))?;
        write_matrix(&sub.join("omega.csv"), &MatrixFile::from_block(&est.omega_hat))?;
        write_text(&sub.join("bic_table.csv"), &bic_table_csv(&sel.bic_table))?;
        write_json(&sub.join("estimate.json"), &EstimateJson::new(est, &spec))?;
        let best_bic = sel
            .bic_table
            .iter()
            .find(|b| b.lambda == sel.best_lambda && b.alpha == sel.best_alpha)
            .map(|b| b.bic)
            .unwrap_or(f64::NAN);
        entries.push(RealSummaryEntry {
            penalty: (&spec).into(),
            n_edges: est.edges.len(),
            lambda_sm: sel.lambda_sm,
            lambda_lower: sel.lambda_bounds.0,
            lambda_upper: sel.lambda_bounds.1,
            bic: best_bic,
            converged: est.converged(),
        });
    }
    let summary = RealSummary {
        p: table.p(),
        m: table.m(),
        n: table.n(),
        entities: &table.entities,
        features: &table.features,
        dropped_rows: table.dropped_rows,
        penalties: entries,
    };
    write_json(&dir.join("summary.json"), &summary)
}
