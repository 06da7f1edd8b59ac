//! Metric correlator functions: a regressor from `(G, phi)` to `F` whose
//! scalar prediction replaces the raw surrogate vector before running the
//! control-variates estimator.

mod mlp;
mod ols;
mod split;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{check_compatibility, MetricKind, PairedDataset, SurrogateDataset};
use crate::error::{Error, Result};
use crate::estimator::{compute_moments, rho_squared, run_cv_pipeline, CiSpec, EstimateReport, Method};

pub use mlp::{logistic, train, validation_split, Loss, Network, OutputActivation, TrainOptions, TrainingLog};
pub use ols::fit_ols;
pub use split::{split_paired, SplitSpec, SplitStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ols,
    Mlp,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(ModelKind::Ols),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

/// Training configuration. The hidden activation is always the rectifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McfConfig {
    pub model: ModelKind,
    pub hidden_layers: Vec<usize>,
    pub output_activation: OutputActivation,
    pub loss: Loss,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub validation_fraction: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for McfConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Mlp,
            hidden_layers: vec![32, 32],
            output_activation: OutputActivation::Identity,
            loss: Loss::Mse,
            learning_rate: 1e-3,
            max_epochs: 2000,
            early_stop_patience: 50,
            validation_fraction: 0.2,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl McfConfig {
    pub fn ols() -> Self {
        Self {
            model: ModelKind::Ols,
            ..Self::default()
        }
    }

    /// Default MLP for a metric kind: binary metrics get a logistic output
    /// trained with cross-entropy.
    pub fn for_metric(kind: MetricKind) -> Self {
        match kind {
            MetricKind::Continuous => Self::default(),
            MetricKind::Binary => Self {
                output_activation: OutputActivation::Logistic,
                loss: Loss::Bce,
                ..Self::default()
            },
        }
    }

    pub fn metric_kind(&self) -> MetricKind {
        match self.loss {
            Loss::Bce => MetricKind::Binary,
            Loss::Mse => MetricKind::Continuous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let logistic = self.output_activation == OutputActivation::Logistic;
        let bce = self.loss == Loss::Bce;
        if logistic != bce {
            return Err(Error::InvalidArgument(
                "cross-entropy loss and logistic output must be used together".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must lie in [0, 0.5], got {}",
                self.validation_fraction
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::InvalidArgument("hidden layer widths must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Per-column affine map to zero mean and unit scale.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Column statistics of `[G, phi]` over the dataset. Constant columns
    /// get scale 1.
    pub fn fit(data: &PairedDataset) -> Self {
        let (d, m) = (data.d(), data.m());
        let p = d + m;
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; p];
        for i in 0..data.len() {
            for (a, v) in data.g_row(i).iter().chain(data.phi_row(i)).enumerate() {
                mean[a] += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= n);
        let mut var = vec![0.0; p];
        for i in 0..data.len() {
            for (a, v) in data.g_row(i).iter().chain(data.phi_row(i)).enumerate() {
                var[a] += (v - mean[a]).powi(2);
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(v, mu)| {
                let s = (v / n).sqrt();
                if s > 1e-12 * (1.0 + mu.abs()) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply_into(&self, g: &[f64], phi: &[f64], out: &mut [f64]) {
        for (a, v) in g.iter().chain(phi).enumerate() {
            out[a] = (v - self.mean[a]) / self.scale[a];
        }
    }
}

/// A trained correlator. Inputs are standardized with the stored column
/// statistics; identity-output networks also de-standardize their output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McfModel {
    pub kind: ModelKind,
    pub d: usize,
    pub m: usize,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
    pub hidden_layers: Vec<usize>,
    pub output_activation: OutputActivation,
    pub parameters: Vec<f64>,
}

impl McfModel {
    pub fn input_dim(&self) -> usize {
        self.d + self.m
    }

    fn network(&self) -> Network {
        Network::new(self.input_dim(), &self.hidden_layers, self.output_activation)
    }

    fn check(&self) -> Result<()> {
        let p = self.input_dim();
        if self.input_mean.len() != p || self.input_scale.len() != p {
            return Err(Error::Schema("standardization vectors do not match input width".into()));
        }
        let expected = match self.kind {
            ModelKind::Ols => p + 1,
            ModelKind::Mlp => self.network().param_count(),
        };
        if self.parameters.len() != expected {
            return Err(Error::Schema(format!(
                "model declares {expected} parameters, found {}",
                self.parameters.len()
            )));
        }
        if self.input_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Schema("standardization scales must be positive".into()));
        }
        Ok(())
    }

    pub fn predict(&self, g: &[f64], phi: &[f64]) -> Result<f64> {
        if g.len() != self.d {
            return Err(Error::DimensionMismatch {
                context: "model surrogate input",
                expected: self.d,
                got: g.len(),
            });
        }
        if phi.len() != self.m {
            return Err(Error::DimensionMismatch {
                context: "model feature input",
                expected: self.m,
                got: phi.len(),
            });
        }
        let p = self.input_dim();
        let mut z = vec![0.0; p];
        for (a, v) in g.iter().chain(phi).enumerate() {
            z[a] = (v - self.input_mean[a]) / self.input_scale[a];
        }
        let raw = match self.kind {
            ModelKind::Ols => {
                let (w, b) = self.parameters.split_at(p);
                b[0] + z.iter().zip(w).map(|(x, w)| x * w).sum::<f64>()
            }
            ModelKind::Mlp => self.network().forward(&self.parameters, &z),
        };
        Ok(match self.output_activation {
            OutputActivation::Identity => raw * self.target_scale + self.target_mean,
            OutputActivation::Logistic => raw,
        })
    }

    /// Slopes and intercept of an OLS model in the original input units.
    pub fn linear_coefficients(&self) -> Option<(Vec<f64>, f64)> {
        if self.kind != ModelKind::Ols {
            return None;
        }
        let p = self.input_dim();
        let slopes: Vec<f64> = (0..p)
            .map(|a| self.parameters[a] / self.input_scale[a] * self.target_scale)
            .collect();
        let shift: f64 = (0..p).map(|a| slopes[a] * self.input_mean[a]).sum();
        let intercept = self.parameters[p] * self.target_scale + self.target_mean - shift;
        Some((slopes, intercept))
    }

    /// Predictions for every row of a paired dataset.
    pub fn predict_paired(&self, data: &PairedDataset) -> Result<Vec<f64>> {
        (0..data.len())
            .map(|i| self.predict(data.g_row(i), data.phi_row(i)))
            .collect()
    }

    pub fn predict_surrogate(&self, data: &SurrogateDataset) -> Result<Vec<f64>> {
        (0..data.len())
            .map(|i| self.predict(data.g_row(i), data.phi_row(i)))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        crate::report::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: McfModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        model.check()?;
        Ok(model)
    }
}

/// A trained model plus what training observed.
#[derive(Debug, Clone)]
pub struct McfFit {
    pub model: McfModel,
    pub log: Option<TrainingLog>,
}

/// Trains an MLP correlator. Training is deterministic given `config.seed`;
/// the checkpoint with the lowest validation loss is returned.
pub fn fit_mlp(fit: &PairedDataset, config: &McfConfig) -> Result<McfFit> {
    config.validate()?;
    if fit.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "network training needs at least 2 samples, got {}",
            fit.len()
        )));
    }
    config.metric_kind().check(fit.f())?;
    let standardizer = Standardizer::fit(fit);
    let p = fit.d() + fit.m();
    let mut xs = vec![0.0; fit.len() * p];
    for i in 0..fit.len() {
        standardizer.apply_into(fit.g_row(i), fit.phi_row(i), &mut xs[i * p..(i + 1) * p]);
    }
    let (target_mean, target_scale) = match config.output_activation {
        OutputActivation::Logistic => (0.0, 1.0),
        OutputActivation::Identity => {
            let n = fit.len() as f64;
            let mu = fit.f().iter().sum::<f64>() / n;
            let sd = (fit.f().iter().map(|y| (y - mu).powi(2)).sum::<f64>() / n).sqrt();
            (mu, if sd > 1e-12 * (1.0 + mu.abs()) { sd } else { 1.0 })
        }
    };
    let ys: Vec<f64> = fit.f().iter().map(|y| (y - target_mean) / target_scale).collect();
    let net = Network::new(p, &config.hidden_layers, config.output_activation);
    let opts = TrainOptions {
        learning_rate: config.learning_rate,
        max_epochs: config.max_epochs,
        patience: config.early_stop_patience,
        validation_fraction: config.validation_fraction,
        batch_size: config.batch_size,
        loss: config.loss,
        seed: config.seed,
    };
    let (parameters, log) = train(&net, &xs, &ys, &opts);
    Ok(McfFit {
        model: McfModel {
            kind: ModelKind::Mlp,
            d: fit.d(),
            m: fit.m(),
            input_mean: standardizer.mean,
            input_scale: standardizer.scale,
            target_mean,
            target_scale,
            hidden_layers: config.hidden_layers.clone(),
            output_activation: config.output_activation,
            parameters,
        },
        log: Some(log),
    })
}

/// Trains the configured model kind.
pub fn fit_mcf(fit: &PairedDataset, config: &McfConfig) -> Result<McfFit> {
    match config.model {
        ModelKind::Ols => Ok(McfFit {
            model: fit_ols(fit)?,
            log: None,
        }),
        ModelKind::Mlp => fit_mlp(fit, config),
    }
}

/// Net-variance-reduction test for trading `n - n_est` paired samples for a
/// better-correlated surrogate:
/// `rho_mcf^2 / (1 + n_est/k) > rho_raw^2 / (1 + n/k)`. False when `k = 0`.
pub fn mcf_worthwhile(rho_sq_mcf: f64, rho_sq_raw: f64, n_est: usize, n: usize, k: usize) -> bool {
    if k == 0 {
        return false;
    }
    let k = k as f64;
    rho_sq_mcf / (1.0 + n_est as f64 / k) > rho_sq_raw / (1.0 + n as f64 / k)
}

/// Result of the correlator pipeline.
#[derive(Debug, Clone)]
pub struct McfOutcome {
    pub report: EstimateReport,
    pub model: McfModel,
    pub log: Option<TrainingLog>,
    pub n_fit: usize,
    pub worthwhile: bool,
}

fn raw_rho_sq(paired: &PairedDataset) -> Result<f64> {
    match rho_squared(&compute_moments(paired)?) {
        Err(Error::DegenerateTarget) => Ok(0.0),
        other => other,
    }
}

/// Maps `est` and the pool through `model` and runs the CV estimator on the
/// scalar predictions. `rho_sq_raw` is recorded on the report.
pub fn apply_mcf(
    model: &McfModel,
    est: &PairedDataset,
    surrogate: &SurrogateDataset,
    ci: Option<CiSpec>,
    rho_sq_raw: f64,
) -> Result<EstimateReport> {
    if est.len() < 2 {
        return Err(Error::InvalidSplit(format!(
            "estimation part needs at least 2 samples, got {}",
            est.len()
        )));
    }
    let features_used = model.m > 0;
    check_compatibility(est, surrogate, features_used)?;
    let est_t = est.with_surrogates(model.predict_paired(est)?, 1)?;
    let pool_t = surrogate.with_surrogates(model.predict_surrogate(surrogate)?, 1)?;
    let mut report = run_cv_pipeline(&est_t, &pool_t, ci)?;
    report.method = Method::ControlVariatesMcf;
    report.rho_sq_raw = Some(rho_sq_raw);
    Ok(report)
}

/// Split, train on `fit ∪ extra_fit`, then run the CV estimator on the
/// estimation part with `G` replaced by the model's prediction.
pub fn run_cv_mcf_pipeline(
    paired: &PairedDataset,
    surrogate: &SurrogateDataset,
    split: &SplitSpec,
    config: &McfConfig,
    ci: Option<CiSpec>,
    extra_fit: Option<&PairedDataset>,
) -> Result<McfOutcome> {
    let (fit, est) = split_paired(paired, split)?;
    if est.len() < 2 {
        return Err(Error::InvalidSplit(format!(
            "n_fit = {} leaves {} samples for estimation; at least 2 are needed",
            split.n_fit,
            est.len()
        )));
    }
    let train_set = match extra_fit {
        Some(extra) => fit.concat(extra)?,
        None => fit,
    };
    if train_set.is_empty() {
        return Err(Error::InsufficientData(
            "no training pairs: n_fit = 0 and no out-of-domain pairs given".into(),
        ));
    }
    let McfFit { model, log } = fit_mcf(&train_set, config)?;
    let rho_sq_raw = raw_rho_sq(paired)?;
    let report = apply_mcf(&model, &est, surrogate, ci, rho_sq_raw)?;
    let worthwhile = mcf_worthwhile(
        report.rho_sq.unwrap_or(0.0),
        rho_sq_raw,
        est.len(),
        paired.len(),
        surrogate.len(),
    );
    Ok(McfOutcome {
        report,
        model,
        log,
        n_fit: split.n_fit,
        worthwhile,
    })
}
