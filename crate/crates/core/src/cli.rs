//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors (one-line diagnostic on
//! stderr), 1 on runtime errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::io::{document, emit, ingest_csv, to_json_string, write_float_csv, ResponseColumn};
use crate::laws::{spearman_threshold, LawThresholds};
use crate::screening::{screen, CorrelationMethod, ScreenConfig, ScreenMode, ScreenSets};
use crate::simulate::{
    run_scenario, sensitivity_sweep, sweep_rows, validate_laws, PipelineConfig, Selector, SimScenario,
};
use crate::solver::{Family, FitModel, LinearProblem, LogisticProblem, PenaltySpec, SolverOptions};
use crate::stats::{standardize, DataMatrix};
use crate::tuning::{tune, ScoreRow, TuningPlan};

pub const THREADS_ENV: &str = "PAIRSEL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "pairsel", version, about = "Pairwise correlation screening and mixed-penalty regression")]
pub struct Cli {
    /// Worker threads (falls back to PAIRSEL_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the screening thresholds t*, s* and r0.
    Quantile(QuantileArgs),
    /// Emit the screening sets for a dataset.
    Screen(ScreenArgs),
    /// Screen, tune and fit; emit the model and predictions.
    Fit(FitArgs),
    /// Run a simulated example and emit its report.
    Simulate(SimulateArgs),
    /// Sensitivity grid over n, p and sigma.
    Sweep(SweepArgs),
    /// Monte Carlo check of the null laws.
    ValidateLaws(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Pearson,
    Spearman,
}

impl From<MethodArg> for CorrelationMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pearson => CorrelationMethod::Pearson,
            MethodArg::Spearman => CorrelationMethod::Spearman,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Gaussian,
    Binomial,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => Family::Gaussian,
            FamilyArg::Binomial => Family::Binomial,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SelectorArg {
    Pcs,
    SisLasso,
    SisRidge,
    Lasso,
}

impl From<SelectorArg> for Selector {
    fn from(s: SelectorArg) -> Self {
        match s {
            SelectorArg::Pcs => Selector::Pcs,
            SelectorArg::SisLasso => Selector::SisLasso,
            SelectorArg::SisRidge => Selector::SisRidge,
            SelectorArg::Lasso => Selector::Lasso,
        }
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Pearson)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Response column: header name or zero-based index.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// The CSV files have no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub data_opts: DataArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    pub family: FamilyArg,
    /// SIS subset size; default floor(n / ln n).
    #[arg(long)]
    pub sis_size: Option<usize>,
    /// Screen all pairs instead of pairs within the SIS subset.
    #[arg(long)]
    pub full_pairs: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Held-out validation CSV; k-fold CV on the training data otherwise.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// Rows to predict; defaults to the validation, then the training data.
    #[arg(long)]
    pub predict: Option<PathBuf>,
    #[command(flatten)]
    pub data_opts: DataArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    pub family: FamilyArg,
    #[arg(long)]
    pub sis_size: Option<usize>,
    /// λ1 values (comma separated); default log grid from λ1,max.
    #[arg(long, value_delimiter = ',')]
    pub lambda1: Vec<f64>,
    /// λ2 values (comma separated); default 0.01,0.1,1,10.
    #[arg(long, value_delimiter = ',')]
    pub lambda2: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
    #[command(flatten)]
    pub out: OutArgs,
    /// Predictions CSV path.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Simulated example 1-5.
    #[arg(long, default_value_t = 1)]
    pub example: u8,
    /// Scenario JSON; overrides --example.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_val: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = SelectorArg::Pcs)]
    pub selector: SelectorArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Long-format per-replication CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub n_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub p_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub sigma_values: Vec<f64>,
    /// Long-format CSV; stdout when omitted.
    #[command(flatten)]
    pub out: OutArgs,
    /// Full JSON reports per cell.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub p: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check_alpha_delta(alpha: f64, delta: f64) -> CliResult {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {alpha}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(usage(format!("--delta must be positive, got {delta}")));
    }
    Ok(())
}

fn resolve_threads(flag: Option<usize>) -> std::result::Result<Option<usize>, Failure> {
    if let Some(t) = flag {
        return if t == 0 { Err(usage("--threads must be positive")) } else { Ok(Some(t)) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs the CLI on `argv` (including the program name), writing documents to
/// `stdout` and diagnostics to `stderr`. Returns the process exit code.
pub fn run_cli<I, T>(argv: I, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("usage error").to_string();
            let _ = writeln!(stderr, "{first}");
            return 2;
        }
    };
    let outcome = resolve_threads(cli.threads).and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
        pool.install(|| dispatch(&cli.command, stdout))
    });
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: &Command, stdout: &mut (dyn Write + Send)) -> CliResult {
    match cmd {
        Command::Quantile(a) => quantile(a, stdout),
        Command::Screen(a) => screen_cmd(a, stdout),
        Command::Fit(a) => fit_cmd(a, stdout),
        Command::Simulate(a) => simulate_cmd(a, stdout),
        Command::Sweep(a) => sweep_cmd(a, stdout),
        Command::ValidateLaws(a) => validate_cmd(a, stdout),
    }
}

#[derive(Debug, Serialize)]
struct QuantileReport {
    n: usize,
    p: usize,
    alpha: f64,
    delta: f64,
    method: CorrelationMethod,
    t_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_star: Option<f64>,
    r0: f64,
}

fn emit_json<T: Serialize>(out: &OutArgs, stdout: &mut dyn Write, kind: &str, body: &T) -> CliResult {
    emit(out.out.as_deref(), stdout, &to_json_string(&document(kind, body))?)?;
    Ok(())
}

fn quantile(a: &QuantileArgs, stdout: &mut dyn Write) -> CliResult {
    let t = &a.thresholds;
    check_alpha_delta(t.alpha, t.delta)?;
    if a.n < 4 || a.p < 2 {
        return Err(usage("quantile needs --n >= 4 and --p >= 2"));
    }
    let method: CorrelationMethod = t.method.into();
    let th = LawThresholds::new(t.alpha, t.delta, a.n, a.p)?;
    if method == CorrelationMethod::Spearman && th.s_star.is_none() {
        spearman_threshold(t.alpha, a.n, a.p)?;
    }
    let report = QuantileReport {
        n: a.n,
        p: a.p,
        alpha: t.alpha,
        delta: t.delta,
        method,
        t_star: th.t_star,
        s_star: th.s_star,
        r0: th.r0,
    };
    emit_json(&a.out, stdout, "quantile", &report)
}

fn load(path: &Path, opts: &DataArgs) -> std::result::Result<DataMatrix, Failure> {
    let response: ResponseColumn = opts.response.parse().expect("infallible");
    Ok(ingest_csv(path, &response, !opts.no_header)?)
}

fn screen_config(t: &ThresholdArgs, family: FamilyArg, sis_size: Option<usize>) -> ScreenConfig {
    ScreenConfig {
        alpha: t.alpha,
        delta: t.delta,
        method: t.method.into(),
        mode: match family {
            FamilyArg::Gaussian => ScreenMode::Linear,
            FamilyArg::Binomial => ScreenMode::Glm,
        },
        sis_size,
        ..Default::default()
    }
}

fn screen_cmd(a: &ScreenArgs, stdout: &mut dyn Write) -> CliResult {
    check_alpha_delta(a.thresholds.alpha, a.thresholds.delta)?;
    if a.sis_size == Some(0) {
        return Err(usage("--sis-size must be positive"));
    }
    let d = load(&a.data, &a.data_opts)?;
    let cfg = ScreenConfig {
        full_pairs: a.full_pairs,
        ..screen_config(&a.thresholds, a.family, a.sis_size)
    };
    let sets = screen(&d, &cfg)?;
    emit_json(&a.out, stdout, "screen_sets", &sets)
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    column_names: Vec<String>,
    screen: &'a ScreenSets,
    lambda1: f64,
    lambda2: f64,
    model: &'a FitModel,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    scores: Vec<ScoreRow>,
}

fn fit_cmd(a: &FitArgs, stdout: &mut dyn Write) -> CliResult {
    check_alpha_delta(a.thresholds.alpha, a.thresholds.delta)?;
    if a.lambda1.iter().chain(&a.lambda2).any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(usage("λ values must be finite and nonnegative"));
    }
    if !(a.tol > 0.0) || a.max_sweeps == 0 {
        return Err(usage("--tol and --max-sweeps must be positive"));
    }
    if a.validation.is_none() && a.folds < 2 {
        return Err(usage("--folds must be at least 2"));
    }
    let family: Family = a.family.into();
    let train = load(&a.train, &a.data_opts)?;
    let validation = a.validation.as_deref().map(|p| load(p, &a.data_opts)).transpose()?;
    let sets = screen(&train, &screen_config(&a.thresholds, a.family, a.sis_size))?;
    let solver = SolverOptions {
        tol: a.tol,
        max_sweeps: a.max_sweeps,
        ..Default::default()
    };

    let (lambda1, lambda2, model, scores) = if a.lambda1.len() == 1 && a.lambda2.len() == 1 {
        let spec = PenaltySpec::from_screen(train.p(), &sets, a.lambda1[0], a.lambda2[0])?;
        let z = standardize(&train)?;
        let model = match family {
            Family::Gaussian => LinearProblem::new(&z).fit(&spec, &solver, None)?,
            Family::Binomial => LogisticProblem::new(&z, train.y())?.fit(&spec, &solver, None)?,
        };
        (a.lambda1[0], a.lambda2[0], model, Vec::new())
    } else {
        let mut plan = match validation {
            Some(_) => TuningPlan::validation(family),
            None => TuningPlan::kfold(family, a.folds, a.seed),
        };
        if !a.lambda1.is_empty() {
            let mut g = a.lambda1.clone();
            g.sort_by(|x, y| y.total_cmp(x));
            plan.lambda1_grid = Some(g);
        }
        if !a.lambda2.is_empty() {
            plan.lambda2_grid = a.lambda2.clone();
        }
        plan.solver = solver;
        let r = tune(&train, &sets, &plan, validation.as_ref())?;
        (r.lambda1, r.lambda2, r.model, r.scores)
    };

    let report = FitReport {
        column_names: (0..train.p()).map(|j| train.column_name(j)).collect(),
        screen: &sets,
        lambda1,
        lambda2,
        model: &model,
        scores,
    };
    emit_json(&a.out, stdout, "fit", &report)?;

    if let Some(path) = &a.predictions {
        let target = match (&a.predict, &validation) {
            (Some(p), _) => load(p, &a.data_opts)?,
            (None, Some(v)) => v.clone(),
            (None, None) => train.clone(),
        };
        let pred = model.predict(target.x())?;
        let eta = model.linear_predictor(target.x())?;
        let rows = (0..target.n()).map(|i| vec![target.y()[i], eta[i], pred[i]]);
        let mut buf = Vec::new();
        write_float_csv(&mut buf, &["y", "linear_predictor", "prediction"], rows)?;
        std::fs::write(path, buf).map_err(Error::from)?;
    }
    Ok(())
}

fn build_scenario(a: &ScenarioArgs) -> std::result::Result<(SimScenario, PipelineConfig), Failure> {
    check_alpha_delta(a.thresholds.alpha, a.thresholds.delta)?;
    let mut sc = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str::<SimScenario>(&text).map_err(Error::from)?
        }
        None => SimScenario::example(a.example).map_err(|e| usage(e.to_string()))?,
    };
    if let Some(p) = a.p {
        if p < 2 {
            return Err(usage("--p must be at least 2"));
        }
        sc = sc.with_p(p);
    }
    if let Some(s) = a.sigma {
        sc.sigma = s;
    }
    if let Some(r) = a.reps {
        if r == 0 {
            return Err(usage("--reps must be positive"));
        }
        sc.replications = r;
    }
    sc.n_train = a.n_train.unwrap_or(sc.n_train);
    sc.n_val = a.n_val.unwrap_or(sc.n_val);
    sc.n_test = a.n_test.unwrap_or(sc.n_test);
    sc.seed = a.seed;
    sc.validate().map_err(|e| usage(e.to_string()))?;
    let mut pipe = PipelineConfig::pcs(a.thresholds.method.into()).with_selector(a.selector.into());
    pipe.screen.alpha = a.thresholds.alpha;
    pipe.screen.delta = a.thresholds.delta;
    pipe.tuning = TuningPlan::validation(sc.family());
    Ok((sc, pipe))
}

fn simulate_cmd(a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult {
    let (sc, pipe) = build_scenario(&a.scenario)?;
    let report = run_scenario(&sc, &pipe)?;
    emit(a.out.out.as_deref(), stdout, &to_json_string(&report)?)?;
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
        w.write_record(["replication", "metric", "value"]).map_err(Error::from)?;
        for (rep, metric, value) in report.long_rows() {
            w.write_record([rep.to_string(), metric.to_string(), crate::io::format_f64(value)?])
                .map_err(Error::from)?;
        }
        w.flush().map_err(Error::from)?;
    }
    Ok(())
}

fn sweep_cmd(a: &SweepArgs, stdout: &mut dyn Write) -> CliResult {
    let (sc, pipe) = build_scenario(&a.scenario)?;
    if a.n_values.iter().any(|&n| n < 4) || a.p_values.iter().any(|&p| p < 2) {
        return Err(usage("sweep needs n >= 4 and p >= 2"));
    }
    let cells = sensitivity_sweep(&sc, &pipe, &a.n_values, &a.p_values, &a.sigma_values)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "p", "sigma", "metric", "mean", "se"]).map_err(Error::from)?;
    for (n, p, sigma, metric, mean, se) in sweep_rows(&cells) {
        w.write_record([
            n.to_string(),
            p.to_string(),
            crate::io::format_f64(sigma)?,
            metric,
            crate::io::format_f64(mean)?,
            crate::io::format_f64(se)?,
        ])
        .map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(a.out.out.as_deref(), stdout, &String::from_utf8(bytes).expect("csv output is UTF-8"))?;
    if let Some(path) = &a.json {
        emit(Some(path), stdout, &to_json_string(&document("sweep", &serde_json::json!({ "cells": cells })))?)?;
    }
    Ok(())
}

fn validate_cmd(a: &ValidateArgs, stdout: &mut dyn Write) -> CliResult {
    check_alpha_delta(a.alpha, a.delta)?;
    if a.n < 4 || a.p < 3 || a.reps < 100 {
        return Err(usage("validate-laws needs --n >= 4, --p >= 3 and --reps >= 100"));
    }
    let report = validate_laws(a.n, a.p, a.reps, a.seed, a.alpha, a.delta)?;
    emit(a.out.out.as_deref(), stdout, &to_json_string(&report)?)?;
    Ok(())
}
