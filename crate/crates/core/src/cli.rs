//! Command-line front end. Every command writes a JSON document (or a CSV
//! table for sweeps) to `--out` or stdout; errors go to stderr as JSON.
//!
//! Exit codes: 0 success, 1 user or data error, 2 internal invariant
//! violation.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::{load_paired, load_surrogate, MetricKind, PairedDataset, Schema};
use crate::error::{Error, Result};
use crate::estimator::{
    compute_moments, cv_variance_theoretical, mc_estimate, min_paired_samples, rho_squared, run_cv_pipeline,
    CiSpec, EstimateReport, Method,
};
use crate::mcf::{
    apply_mcf, fit_mcf, mcf_worthwhile, run_cv_mcf_pipeline, split_paired, McfConfig, McfFit, McfModel,
    ModelKind, SplitSpec,
};
use crate::report;
use crate::synthetic::{
    run_trials, sweep_fit_fraction, sweep_k, write_csv, GaussianPopulation, NonlinearPopulation, Population,
    TrialConfig, TrialReport,
};

#[derive(Debug, Parser)]
#[command(name = "cvest", version, about = "Control-variate estimation of expensive metrics from cheap surrogates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the target mean from paired data and an optional surrogate pool.
    Estimate(EstimateArgs),
    /// Paired samples needed to match a Monte Carlo interval.
    Plan(PlanArgs),
    /// Repeated trials on a synthetic population.
    Simulate(SimulateArgs),
    /// Trials across a grid of surrogate pool sizes; writes CSV.
    SweepK(SweepKArgs),
    /// Trials across a grid of correlator fit fractions; writes CSV.
    SweepFit(SweepFitArgs),
    /// Train a metric correlator and save it as JSON.
    TrainMcf(TrainMcfArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ols,
    Mlp,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ols => ModelKind::Ols,
            ModelArg::Mlp => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mc,
    Cv,
    CvMcf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Mc => Method::MonteCarlo,
            MethodArg::Cv => Method::ControlVariates,
            MethodArg::CvMcf => Method::ControlVariatesMcf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PopulationArg {
    Gaussian,
    Nonlinear,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Map a file column onto a canonical name (`F`, `G_i`, `PHI_i`, `scenario_id`).
    #[arg(long = "rename", value_name = "HEADER=NAME", value_parser = parse_rename)]
    pub renames: Vec<(String, String)>,
}

impl InputArgs {
    fn schema(&self) -> Schema {
        Schema {
            renames: self.renames.iter().cloned().collect(),
            ..Schema::default()
        }
    }
}

fn parse_rename(s: &str) -> std::result::Result<(String, String), String> {
    match s.split_once('=') {
        Some((from, to)) if !from.is_empty() && !to.is_empty() => Ok((from.to_string(), to.to_string())),
        _ => Err(format!("expected HEADER=NAME, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct CiArgs {
    /// Failure probability of the Chebyshev interval.
    #[arg(long, conflicts_with = "alpha")]
    pub delta: Option<f64>,
    /// Fixed interval half-width; reports the failure probability bound.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl CiArgs {
    fn spec(&self) -> CiSpec {
        match (self.delta, self.alpha) {
            (_, Some(a)) => CiSpec::Alpha(a),
            (Some(d), None) => CiSpec::Delta(d),
            (None, None) => CiSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Binary target: logistic output trained with cross-entropy.
    #[arg(long)]
    pub binary: bool,
    #[arg(long, value_delimiter = ',', default_value = "32,32")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long = "lr", default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    #[arg(long = "val-frac", default_value_t = 0.2)]
    pub validation_fraction: f64,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
}

impl TrainArgs {
    fn config(&self, model: ModelArg, seed: u64) -> McfConfig {
        let kind = if self.binary {
            MetricKind::Binary
        } else {
            MetricKind::Continuous
        };
        McfConfig {
            model: model.into(),
            hidden_layers: self.hidden.clone(),
            learning_rate: self.learning_rate,
            max_epochs: self.epochs,
            early_stop_patience: self.patience,
            validation_fraction: self.validation_fraction,
            batch_size: self.batch_size,
            seed,
            ..McfConfig::for_metric(kind)
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub paired: PathBuf,
    #[arg(long)]
    pub surrogate: Option<PathBuf>,
    #[command(flatten)]
    pub ci: CiArgs,
    /// Train a correlator of this kind on part of the paired data.
    #[arg(long, requires = "surrogate", conflicts_with = "mcf_model")]
    pub mcf: Option<ModelArg>,
    /// Paired rows used to train the correlator.
    #[arg(long, requires = "mcf")]
    pub n_fit: Option<usize>,
    /// Additional out-of-domain pairs for correlator training only.
    #[arg(long, requires = "mcf")]
    pub extra_fit: Option<PathBuf>,
    /// Apply a previously trained correlator to all paired rows.
    #[arg(long, requires = "surrogate")]
    pub mcf_model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Paired sample count of the Monte Carlo reference.
    #[arg(long)]
    pub n_r: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, conflicts_with = "rho_sq", required_unless_present = "rho_sq", allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub rho_sq: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PopulationArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub population: PopulationArg,
    /// Gaussian: correlation between F and the surrogates.
    #[arg(long, default_value_t = 0.9, allow_hyphen_values = true)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu_f: f64,
    #[arg(long, default_value_t = 1.0)]
    pub var_f: f64,
    /// Gaussian: surrogate dimension.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Nonlinear: feature dimension.
    #[arg(long, default_value_t = 2)]
    pub features: usize,
    #[arg(long, default_value_t = 0.3)]
    pub noise_g: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise_f: f64,
}

impl PopulationArgs {
    fn build(&self) -> Result<Box<dyn Population>> {
        Ok(match self.population {
            PopulationArg::Gaussian => Box::new(GaussianPopulation::with_rho(self.mu_f, self.var_f, self.d, self.rho)?),
            PopulationArg::Nonlinear => Box::new(NonlinearPopulation::new(self.features, self.noise_g, self.noise_f)?),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrialArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub ci: CiArgs,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long, default_value_t = 900)]
    pub k: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mc,cv")]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value = "mlp")]
    pub mcf: ModelArg,
    #[arg(long)]
    pub n_fit: Option<usize>,
    /// Exit with status 1 if any MC or CV relative variance error exceeds this.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Also write the CSV table here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepKArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "cv")]
    pub methods: Vec<MethodArg>,
    /// Also write the full reports as JSON here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepFitArgs {
    #[command(flatten)]
    pub trial: TrialArgs,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub fractions: Vec<f64>,
    #[arg(long, value_enum, default_value = "mlp")]
    pub mcf: ModelArg,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainMcfArgs {
    #[arg(long)]
    pub paired: PathBuf,
    /// Paired rows used for training; the rest form the holdout. Defaults to all rows.
    #[arg(long)]
    pub n_fit: Option<usize>,
    #[arg(long)]
    pub extra_fit: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mlp")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the training summary here instead of stdout.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub train: TrainArgs,
}

/// Parses `args` (including the program name), runs the command and maps
/// the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ToleranceExceeded(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    ToleranceExceeded(String),
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::SweepK(a) => cmd_sweep_k(a),
        Command::SweepFit(a) => cmd_sweep_fit(a),
        Command::TrainMcf(a) => cmd_train_mcf(a),
    }
}

fn emit(out: Option<&Path>, text: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, report::to_string(value)?.as_bytes())
}

fn emit_csv(out: Option<&Path>, reports: &[TrialReport]) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    emit(out, &buf)
}

#[derive(Debug, Serialize)]
struct McfSummary {
    kind: ModelKind,
    n_fit: usize,
    n_est: usize,
    rho_sq_raw: f64,
    rho_sq_mcf: f64,
    worthwhile: bool,
}

#[derive(Debug, Serialize)]
struct EstimateOutput {
    reports: Vec<EstimateReport>,
    mcf: Option<McfSummary>,
    /// CV_MCF when the net-reduction test passes, else CV when a pool was
    /// given, else MC.
    recommended: Method,
}

fn raw_rho_sq(paired: &PairedDataset) -> Result<f64> {
    match rho_squared(&compute_moments(paired)?) {
        Err(Error::DegenerateTarget) => Ok(0.0),
        other => other,
    }
}

fn cmd_estimate(a: &EstimateArgs) -> Result<Status> {
    let schema = a.input.schema();
    let ci = a.ci.spec();
    let paired = load_paired(&a.paired, &schema)?;
    let mut reports = vec![mc_estimate(paired.f())?.with_ci(ci)?];
    let mut mcf = None;
    let mut recommended = Method::MonteCarlo;

    if let Some(path) = &a.surrogate {
        let pool = load_surrogate(path, &schema)?;
        reports.push(run_cv_pipeline(&paired, &pool, Some(ci))?);
        recommended = Method::ControlVariates;

        let trained = if let Some(kind) = a.mcf {
            let n_fit = a
                .n_fit
                .ok_or_else(|| Error::InvalidArgument("--mcf needs --n-fit".into()))?;
            let extra = a.extra_fit.as_ref().map(|p| load_paired(p, &schema)).transpose()?;
            let config = a.train.config(kind, a.seed);
            let out = run_cv_mcf_pipeline(
                &paired,
                &pool,
                &SplitSpec::shuffled(n_fit, a.seed),
                &config,
                Some(ci),
                extra.as_ref(),
            )?;
            Some((out.report, out.model.kind, n_fit, out.worthwhile))
        } else if let Some(path) = &a.mcf_model {
            let model = McfModel::load(path)?;
            let rho_raw = raw_rho_sq(&paired)?;
            let report = apply_mcf(&model, &paired, &pool, Some(ci), rho_raw)?;
            let worthwhile = mcf_worthwhile(report.rho_sq.unwrap_or(0.0), rho_raw, paired.len(), paired.len(), pool.len());
            Some((report, model.kind, 0, worthwhile))
        } else {
            None
        };

        if let Some((report, kind, n_fit, worthwhile)) = trained {
            mcf = Some(McfSummary {
                kind,
                n_fit,
                n_est: report.n_used,
                rho_sq_raw: report.rho_sq_raw.unwrap_or(0.0),
                rho_sq_mcf: report.rho_sq.unwrap_or(0.0),
                worthwhile,
            });
            if worthwhile {
                recommended = Method::ControlVariatesMcf;
            }
            reports.push(report);
        }
    }

    emit_json(
        a.out.as_deref(),
        &EstimateOutput {
            reports,
            mcf,
            recommended,
        },
    )?;
    Ok(Status::Ok)
}

#[derive(Debug, Serialize)]
struct PlanOutput {
    n_r: usize,
    k: usize,
    rho_sq: f64,
    n_min: f64,
    n_min_ceil: usize,
    /// `1 - n_min / n_r`.
    reduction: f64,
    /// Predicted CV variance at `n_min_ceil`, relative to Monte Carlo at `n_r`.
    relative_variance: f64,
}

/// Planner arithmetic shared with the tests.
pub fn plan(n_r: usize, k: usize, rho_sq: f64) -> Result<(f64, usize, f64)> {
    if n_r == 0 {
        return Err(Error::InvalidArgument("n_r must be positive".into()));
    }
    if !(0.0..=1.0).contains(&rho_sq) {
        return Err(Error::InvalidArgument(format!("rho^2 must lie in [0, 1], got {rho_sq}")));
    }
    let n_min = min_paired_samples(n_r, k, rho_sq);
    // Guard against 200.00000000000003-style round-up.
    let ceil = ((n_min - 1e-9).ceil().max(1.0)) as usize;
    Ok((n_min, ceil, 1.0 - n_min / n_r as f64))
}

fn cmd_plan(a: &PlanArgs) -> Result<Status> {
    let rho_sq = match (a.rho, a.rho_sq) {
        (Some(r), _) => {
            if !(-1.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("rho must lie in [-1, 1], got {r}")));
            }
            r * r
        }
        (None, Some(r2)) => r2,
        (None, None) => return Err(Error::InvalidArgument("give --rho or --rho-sq".into())),
    };
    let (n_min, n_min_ceil, reduction) = plan(a.n_r, a.k, rho_sq)?;
    let relative_variance = cv_variance_theoretical(1.0, rho_sq, n_min_ceil, a.k) * a.n_r as f64;
    emit_json(
        a.out.as_deref(),
        &PlanOutput {
            n_r: a.n_r,
            k: a.k,
            rho_sq,
            n_min,
            n_min_ceil,
            reduction,
            relative_variance,
        },
    )?;
    Ok(Status::Ok)
}

fn trial_config(t: &TrialArgs, k: usize, methods: &[MethodArg]) -> TrialConfig {
    let mut cfg = TrialConfig::new(t.n, k, t.trials, t.seed);
    cfg.methods = methods.iter().map(|&m| m.into()).collect();
    cfg.methods.dedup();
    cfg.ci = t.ci.spec();
    cfg
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Status> {
    let pop = a.trial.population.build()?;
    let mut cfg = trial_config(&a.trial, a.k, &a.methods);
    if cfg.methods.contains(&Method::ControlVariatesMcf) {
        let n_fit = a.n_fit.unwrap_or(a.trial.n / 4);
        cfg = cfg.with_mcf(n_fit, a.trial.train.config(a.mcf, a.trial.seed));
    }
    let report = run_trials(pop.as_ref(), &cfg, a.k as f64)?;
    if let Some(path) = &a.csv {
        emit_csv(Some(path), std::slice::from_ref(&report))?;
    }
    emit_json(a.out.as_deref(), &report)?;
    if let Some(tol) = a.tolerance {
        let violations: Vec<String> = report
            .methods
            .iter()
            .filter(|s| s.method != Method::ControlVariatesMcf && s.rel_err > tol)
            .map(|s| format!("{}: rel_err {} > {}", s.method.as_str(), s.rel_err, tol))
            .collect();
        if !violations.is_empty() {
            return Ok(Status::ToleranceExceeded(format!("tolerance exceeded: {}", violations.join("; "))));
        }
    }
    Ok(Status::Ok)
}

fn cmd_sweep_k(a: &SweepKArgs) -> Result<Status> {
    let pop = a.trial.population.build()?;
    let cfg = trial_config(&a.trial, 0, &a.methods);
    if cfg.methods.contains(&Method::ControlVariatesMcf) {
        return Err(Error::InvalidArgument("sweep-k runs MC and CV only; use sweep-fit for CV_MCF".into()));
    }
    let reports = sweep_k(pop.as_ref(), &cfg, &a.grid)?;
    if let Some(path) = &a.summary {
        emit_json(Some(path), &reports)?;
    }
    emit_csv(a.out.as_deref(), &reports)?;
    Ok(Status::Ok)
}

fn cmd_sweep_fit(a: &SweepFitArgs) -> Result<Status> {
    let pop = a.trial.population.build()?;
    let cfg = trial_config(&a.trial, a.k, &[MethodArg::Mc, MethodArg::Cv]);
    let config = a.trial.train.config(a.mcf, a.trial.seed);
    let reports = sweep_fit_fraction(pop.as_ref(), &cfg, &config, &a.fractions)?;
    if let Some(path) = &a.summary {
        emit_json(Some(path), &reports)?;
    }
    emit_csv(a.out.as_deref(), &reports)?;
    Ok(Status::Ok)
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    model: PathBuf,
    kind: ModelKind,
    n_fit: usize,
    n_extra: usize,
    n_holdout: usize,
    epochs_run: Option<usize>,
    final_train_loss: Option<f64>,
    best_val_loss: Option<f64>,
    /// Pearson correlation between predictions and `F` on the paired rows
    /// not used for training; null with fewer than two such rows.
    holdout_pearson: Option<f64>,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    let denom = (sxx * syy).sqrt();
    (denom > 0.0).then(|| sxy / denom)
}

fn cmd_train_mcf(a: &TrainMcfArgs) -> Result<Status> {
    let schema = a.input.schema();
    let paired = load_paired(&a.paired, &schema)?;
    let n_fit = a.n_fit.unwrap_or(paired.len());
    let (fit, holdout) = split_paired(&paired, &SplitSpec::shuffled(n_fit, a.seed))?;
    let extra = a.extra_fit.as_ref().map(|p| load_paired(p, &schema)).transpose()?;
    let n_extra = extra.as_ref().map_or(0, PairedDataset::len);
    let train_set = match &extra {
        Some(e) => fit.concat(e)?,
        None => fit,
    };
    if train_set.is_empty() {
        return Err(Error::InsufficientData(
            "no training pairs: --n-fit 0 needs --extra-fit".into(),
        ));
    }
    let McfFit { model, log } = fit_mcf(&train_set, &a.train.config(a.model, a.seed))?;
    model.save(&a.out)?;
    let preds = model.predict_paired(&holdout)?;
    let summary = TrainSummary {
        model: a.out.clone(),
        kind: model.kind,
        n_fit,
        n_extra,
        n_holdout: holdout.len(),
        epochs_run: log.as_ref().map(|l| l.epochs_run),
        final_train_loss: log.as_ref().map(|l| l.final_train_loss),
        best_val_loss: log.as_ref().map(|l| l.best_val_loss),
        holdout_pearson: pearson(&preds, holdout.f()),
    };
    emit_json(a.summary.as_deref(), &summary)?;
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn planner_examples() {
        let (n_min, _, red) = plan(715, 1669, 0.79 * 0.79).unwrap();
        assert!((340.0..=360.0).contains(&n_min));
        assert!((red - 0.51).abs() < 0.02);
        let (_, ceil, red) = plan(200, 400, 0.0728 * 0.0728).unwrap();
        assert_eq!(ceil, 200);
        assert!(red.abs() < 0.01);
        let (n_min, ceil, red) = plan(123, 0, 0.7).unwrap();
        assert_eq!((n_min, ceil, red), (123.0, 123, 0.0));
        assert!(plan(10, 10, 1.5).is_err());
    }

    #[test]
    fn rename_parsing() {
        assert_eq!(parse_rename("score=F").unwrap(), ("score".into(), "F".into()));
        assert!(parse_rename("score").is_err());
        assert!(parse_rename("=F").is_err());
    }
}
