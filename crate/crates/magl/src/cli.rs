//! The `magl` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use magl_core::admm::{AdmmSolver, AdmmStart, IterationTrace};
use magl_core::datagen::{sample_with_factor, sampling_factor};
use magl_core::diagnostics::{hessian_convexity_check, irrepresentability, kkt_residual, tail_bound_check};
use magl_core::estimator::{continue_lla, initial_estimate, sample_covariance};
use magl_core::penalty::lla_weights;
use magl_core::select::{select, SelectionConfig};
use magl_core::{BlockMatrix, GraphEstimate, PenaltyKind, PenaltySpec};

use crate::config::{parse_penalty, ConfigFile, ExperimentConfig};
use crate::eig::FaerEigensolver;
use crate::error::{MaglError, Result};
use crate::format::{bic_table_csv, edge_list_tsv, read_matrix, trace_csv, write_json, write_matrix, write_text, MatrixFile};
use crate::harness::{run_real, run_synthetic, write_real, write_synthetic, RealConfig};
use crate::ingest::ingest_csv;
use crate::report::{EstimateJson, GroundTruthJson, HessianJson, IrrepJson, KktJson, TailBoundJson};

#[derive(Debug, Parser)]
#[command(name = "magl", version, about = "Multi-attribute graph learning with sparse-group penalties")]
pub struct Cli {
    /// Log progress.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic benchmark over runs, sample sizes and penalties.
    Synth(SynthArgs),
    /// Generate a ground truth and samples.
    Gen(GenArgs),
    /// Fit one (penalty, λ, α).
    Fit(FitArgs),
    /// BIC selection of λ then α.
    Select(SelectArgs),
    /// Per-entity price CSVs to a standardized return table, optionally fitted.
    Ingest(IngestArgs),
    /// Diagnostics.
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ConfigFile> {
        match &self.config {
            Some(p) => ConfigFile::load(p),
            None => Ok(ConfigFile::default()),
        }
    }

    fn out(&self, file: &ConfigFile) -> PathBuf {
        self.output_dir.clone().or_else(|| file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Debug, Args)]
pub struct PenaltyArgs {
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
}

impl PenaltyArgs {
    fn apply(&self, file: &mut ConfigFile) {
        if let Some(p) = &self.penalty {
            file.penalty = Some(p.clone());
        }
        file.lambda = self.lambda.or(file.lambda);
        file.alpha = self.alpha.or(file.alpha);
        file.theta = self.theta.or(file.theta);
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Replaces the configured penalty list; repeatable.
    #[arg(long)]
    pub penalty: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples to draw; the configured first sample size by default.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Matrix file (CSV or MAGM binary) with samples as rows.
    #[arg(long)]
    pub input: PathBuf,
    /// The input is already a covariance matrix.
    #[arg(long)]
    pub covariance: bool,
}

impl InputArgs {
    /// Σ̂ and the sample count (0 for a covariance input without `n`).
    fn sigma(&self, n: Option<usize>) -> Result<(BlockMatrix, usize)> {
        let f = read_matrix(&self.input)?;
        if self.covariance {
            let n = n.unwrap_or(0);
            Ok((f.into_block()?, n))
        } else {
            let rows = f.data.rows();
            Ok((sample_covariance(&f.data, f.p, f.m)?, rows))
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Also write the per-iteration trace of the first ADMM solve.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    /// Sample size, needed with `--covariance`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Scan λ only, at the phase-one α.
    #[arg(long)]
    pub lambda_only: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// One CSV per entity.
    #[arg(long, num_args = 1.., required = true)]
    pub files: Vec<PathBuf>,
    /// Feature columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub features: Vec<String>,
    /// Fit and select with these penalties after ingestion; repeatable.
    #[arg(long)]
    pub penalty: Vec<String>,
    /// CSV of `entity,group` labels carried into the edge lists.
    #[arg(long)]
    pub groups: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Stationarity residual of an estimate.
    Kkt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: PathBuf,
        /// Covariance matrix file.
        #[arg(long)]
        sigma: PathBuf,
        #[command(flatten)]
        penalty: PenaltyArgs,
    },
    /// Hessian convexity check on a small matrix.
    Convexity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega: PathBuf,
        #[arg(long)]
        mu: f64,
    },
    /// Monte Carlo tail bound of the sample covariance.
    TailBound {
        #[command(flatten)]
        common: Common,
        /// True covariance matrix file.
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3.0)]
        tau: f64,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Irrepresentability of a generated ground truth.
    Irrep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn spec_from(file: &ConfigFile) -> Result<PenaltySpec> {
    if file.lambda.is_none() {
        return Err(MaglError::Usage("--lambda is required".into()));
    }
    let spec = file.penalty_spec(file.penalty_kind()?);
    spec.validate().map_err(|e| MaglError::Usage(e.to_string()))?;
    Ok(spec)
}

fn write_estimate(dir: &Path, est: &GraphEstimate, spec: &PenaltySpec, names: Option<&[String]>) -> Result<()> {
    write_json(&dir.join("estimate.json"), &EstimateJson::new(est, spec))?;
    write_matrix(&dir.join("omega.csv"), &MatrixFile::from_block(&est.omega_hat))?;
    write_text(&dir.join("edges.tsv"), &edge_list_tsv(&est.edges, &est.omega_hat, names, None))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut file = args.common.load()?;
    file.seed = args.seed.or(file.seed);
    file.jobs = args.jobs.or(file.jobs);
    file.alpha = args.alpha.or(file.alpha);
    file.theta = args.theta.or(file.theta);
    if !args.penalty.is_empty() {
        file.penalties = Some(args.penalty.clone());
    }
    let dir = args.common.out(&file);
    let cfg = ExperimentConfig::from_file(&file)?;
    let report = run_synthetic(&cfg)?;
    write_synthetic(&report, &cfg, &dir)?;
    for a in &report.aggregates {
        println!(
            "{} n={} {:<8} {:<9} F1 {:.3} ({:.3})  Hamming {:.2} ({:.2})  Frob {:.3} ({:.3})  {:.2}s",
            a.graph, a.n, a.penalty, a.selection, a.f1_mean, a.f1_std, a.hamming_mean, a.hamming_std,
            a.frob_error_mean, a.frob_error_std, a.elapsed_seconds_mean
        );
    }
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let mut file = args.common.load()?;
    file.seed = args.seed.or(file.seed);
    let dir = args.common.out(&file);
    let cfg = ExperimentConfig::from_file(&file)?;
    let n = args.n.unwrap_or(cfg.n_list[0]);
    let truth = crate::harness::run_truth(&cfg, 0)?;
    let phi = sampling_factor(&FaerEigensolver, &truth.omega_star)?;
    let data = sample_with_factor(&phi, n, crate::harness::sample_seed(cfg.seed, 0, n))?;
    write_json(&dir.join("truth.json"), &GroundTruthJson::from(&truth))?;
    write_matrix(&dir.join("omega_star.csv"), &MatrixFile::from_block(&truth.omega_star))?;
    write_matrix(&dir.join("data.csv"), &MatrixFile::new(data, cfg.p, cfg.m)?)
}

fn fit(args: &FitArgs) -> Result<()> {
    let mut file = args.common.load()?;
    args.penalty.apply(&mut file);
    let dir = args.common.out(&file);
    let spec = spec_from(&file)?;
    let opts = file.fit_options()?;
    let (sigma, _) = args.input.sigma(None)?;
    let eig = FaerEigensolver;
    let omega_bar = initial_estimate(&sigma)?;
    let weights = lla_weights(&spec, &omega_bar);
    let solver = AdmmSolver::with_eigensolver(opts.admm, &eig);
    let mut trace: Vec<IterationTrace> = Vec::new();
    let mut record = |t: &IterationTrace| trace.push(*t);
    let sink: Option<&mut dyn FnMut(&IterationTrace)> = if args.trace { Some(&mut record) } else { None };
    let first = solver.solve_from(&sigma, &weights, spec.alpha, AdmmStart::cold(omega_bar), sink)?;
    let est = continue_lla(&eig, &sigma, &spec, &opts, first)?;
    write_estimate(&dir, &est, &spec, None)?;
    if args.trace {
        write_text(&dir.join("trace.csv"), &trace_csv(&trace))?;
    }
    println!("{} edges, converged: {}, iterations: {}", est.edges.len(), est.converged(), est.iterations());
    Ok(())
}

fn select_cmd(args: &SelectArgs) -> Result<()> {
    let mut file = args.common.load()?;
    args.penalty.apply(&mut file);
    let dir = args.common.out(&file);
    let template = file.penalty_spec(file.penalty_kind()?);
    let opts = file.fit_options()?;
    let (sigma, n) = args.input.sigma(args.n)?;
    if n < 2 {
        return Err(MaglError::Usage("BIC needs a sample size of at least 2; pass --n".into()));
    }
    let mut config = if args.lambda_only { SelectionConfig::synthetic() } else { SelectionConfig::real_data() };
    if let Some(a) = file.alpha {
        config.phase_one_alpha = a;
    }
    if let Some(g) = file.grid_size {
        config.grid_size = g;
    }
    let result = select(&FaerEigensolver, &sigma, n, &template, &opts, &config)?;
    let spec = template.with_lambda(result.best_lambda).with_alpha(result.best_alpha);
    write_estimate(&dir, &result.best, &spec, None)?;
    write_text(&dir.join("bic_table.csv"), &bic_table_csv(&result.bic_table))?;
    println!(
        "lambda {} alpha {} edges {} (lambda_sm {})",
        result.best_lambda,
        result.best_alpha,
        result.best.edges.len(),
        result.lambda_sm
    );
    Ok(())
}

fn read_groups(path: &Path, entities: &[String]) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut map = std::collections::HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if let (Some(e), Some(g)) = (rec.get(0), rec.get(1)) {
            map.insert(e.to_string(), g.to_string());
        }
    }
    Ok(entities.iter().map(|e| map.get(e).cloned().unwrap_or_default()).collect())
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let file = args.common.load()?;
    let dir = args.common.out(&file);
    let table = ingest_csv(&args.files, &args.features)?;
    write_matrix(&dir.join("returns.csv"), &MatrixFile::new(table.values.clone(), table.p(), table.m())?)?;
    write_json(&dir.join("table.json"), &table)?;
    info!("{} returns over {} entities x {} features", table.n(), table.p(), table.m());
    let penalties: Vec<PenaltyKind> = args.penalty.iter().map(|s| parse_penalty(s)).collect::<Result<_>>()?;
    let groups = args.groups.as_deref().map(|g| read_groups(g, &table.entities)).transpose()?;
    let mut real = RealConfig { fit: file.fit_options()?, ..RealConfig::default() };
    real.template = file.penalty_spec(PenaltyKind::Lasso);
    if let Some(g) = file.grid_size {
        real.selection.grid_size = g;
    }
    let results = run_real(&table, &penalties, &real)?;
    write_real(&results, &table, groups.as_deref(), &dir)?;
    for r in &results {
        println!(
            "{}: lambda {} alpha {} edges {}",
            r.spec.kind.name(),
            r.spec.lambda,
            r.spec.alpha,
            r.selection.best.edges.len()
        );
    }
    Ok(())
}

fn diagnose(cmd: &DiagnoseCommand) -> Result<()> {
    match cmd {
        DiagnoseCommand::Kkt { common, omega, sigma, penalty } => {
            let mut file = common.load()?;
            penalty.apply(&mut file);
            let spec = spec_from(&file)?;
            let omega = read_matrix(omega)?.into_block()?;
            let sigma = read_matrix(sigma)?.into_block()?;
            let r = kkt_residual(&omega, &sigma, &spec)?;
            write_json(&common.out(&file).join("kkt.json"), &KktJson::from(&r))?;
            println!("residual {:e}, infeasibility {:e}, feasible {}", r.residual_inf, r.max_infeasibility, r.subgradient_feasible);
        }
        DiagnoseCommand::Convexity { common, omega, mu } => {
            let file = common.load()?;
            let omega = read_matrix(omega)?.into_block()?;
            let h = hessian_convexity_check(&omega, *mu)?;
            write_json(&common.out(&file).join("convexity.json"), &HessianJson::from(&h))?;
            println!("phi_min {} analytic {} convex {}", h.phi_min, h.analytic, h.convex);
        }
        DiagnoseCommand::TailBound { common, sigma, n, tau, trials, seed } => {
            let file = common.load()?;
            let sigma = read_matrix(sigma)?.into_block()?;
            let r = tail_bound_check(&sigma, *n, *tau, *trials, *seed)?;
            let dir = common.out(&file);
            write_json(&dir.join("tail_bound.json"), &TailBoundJson::from(&r))?;
            write_text(&dir.join("tail_bound_trials.csv"), &crate::report::tail_deviations_csv(&r))?;
            println!("rate {} (elementwise {}) bound {} passes {}", r.empirical_rate, r.elementwise_rate, r.bound, r.passes);
        }
        DiagnoseCommand::Irrep { common, seed } => {
            let mut file = common.load()?;
            file.seed = seed.or(file.seed);
            let cfg = ExperimentConfig::from_file(&file)?;
            let truth = crate::harness::run_truth(&cfg, 0)?;
            let r = irrepresentability(&truth)?;
            write_json(&common.out(&file).join("irrep.json"), &IrrepJson::from(&r))?;
            println!("group {} element {} gamma {}", r.lhs_group, r.lhs_element, r.gamma_implied);
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit(a),
        Command::Select(a) => select_cmd(a),
        Command::Ingest(a) => ingest(a),
        Command::Diagnose(c) => diagnose(c),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

