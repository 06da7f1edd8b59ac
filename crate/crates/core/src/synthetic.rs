//! Populations with known ground truth and repeated-trial experiments that
//! compare empirical estimator variance against the closed-form prediction.
//!
//! Trial `t` of a run with master seed `s` draws from ChaCha stream `t` of
//! the generator seeded with `s`, so results do not depend on scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{PairedDataset, SurrogateDataset};
use crate::error::{Error, Result};
use crate::estimator::{cv_variance_theoretical, mc_estimate, run_cv_pipeline, CiSpec, Method};
use crate::linalg::{cholesky, solve_spd};
use crate::mcf::{run_cv_mcf_pipeline, McfConfig, SplitSpec};

/// A distribution over scenarios that yields `(F, G, phi)` draws.
pub trait Population: Sync {
    fn d(&self) -> usize;
    fn m(&self) -> usize;
    fn mean_f(&self) -> f64;
    fn var_f(&self) -> f64;
    /// Population squared correlation between `F` and the best linear
    /// combination of `G`.
    fn rho_sq(&self) -> f64;
    /// Writes one draw of `G` and `phi` and returns `F`.
    fn draw(&self, rng: &mut ChaCha8Rng, g: &mut [f64], phi: &mut [f64]) -> f64;
}

/// Jointly Gaussian `(F, G)`.
///
/// Stored as a mean and lower-triangular factor over the ordering
/// `(G_1, .., G_d, F)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPopulation {
    d: usize,
    mean: Vec<f64>,
    factor: Vec<f64>,
    var_f: f64,
    rho_sq: f64,
}

impl GaussianPopulation {
    /// `G ~ N(0, I_d)` and `F` with mean `mu_f`, variance `var_f` and
    /// correlation `rho` with `sum(G) / sqrt(d)`. `|rho| = 1` is allowed.
    pub fn with_rho(mu_f: f64, var_f: f64, d: usize, rho: f64) -> Result<Self> {
        if !(var_f > 0.0 && var_f.is_finite()) {
            return Err(Error::InvalidArgument(format!("var_f must be positive, got {var_f}")));
        }
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::InvalidArgument(format!("rho must lie in [-1, 1], got {rho}")));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("at least one surrogate is required".into()));
        }
        let p = d + 1;
        let sigma = var_f.sqrt();
        let mut factor = vec![0.0; p * p];
        for a in 0..d {
            factor[a * p + a] = 1.0;
            factor[d * p + a] = sigma * rho / (d as f64).sqrt();
        }
        factor[d * p + d] = sigma * (1.0 - rho * rho).max(0.0).sqrt();
        let mut mean = vec![0.0; p];
        mean[d] = mu_f;
        Ok(Self {
            d,
            mean,
            factor,
            var_f,
            rho_sq: rho * rho,
        })
    }

    /// Full joint specification. `cov` is `(d+1) x (d+1)` row-major over the
    /// ordering `(F, G_1, .., G_d)` and must be positive definite.
    pub fn with_covariance(mu_f: f64, mu_g: &[f64], cov: &[f64]) -> Result<Self> {
        let d = mu_g.len();
        let p = d + 1;
        if d == 0 {
            return Err(Error::InvalidArgument("at least one surrogate is required".into()));
        }
        if cov.len() != p * p {
            return Err(Error::DimensionMismatch {
                context: "joint covariance",
                expected: p * p,
                got: cov.len(),
            });
        }
        for a in 0..p {
            for b in 0..a {
                if cov[a * p + b] != cov[b * p + a] {
                    return Err(Error::InvalidArgument("joint covariance must be symmetric".into()));
                }
            }
        }
        // Move F from position 0 to position d.
        let pos = |i: usize| if i == 0 { d } else { i - 1 };
        let mut reordered = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..p {
                reordered[pos(a) * p + pos(b)] = cov[a * p + b];
            }
        }
        let factor = cholesky(&reordered, p)
            .ok_or_else(|| Error::InvalidArgument("joint covariance is not positive definite".into()))?;
        let var_f = cov[0];
        let sigma_g: Vec<f64> = (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .map(|(a, b)| reordered[a * p + b])
            .collect();
        let cov_gf: Vec<f64> = (0..d).map(|a| reordered[a * p + d]).collect();
        let w = solve_spd(&sigma_g, d, &cov_gf)?;
        let explained: f64 = w.iter().zip(&cov_gf).map(|(w, c)| w * c).sum();
        let mut mean = mu_g.to_vec();
        mean.push(mu_f);
        Ok(Self {
            d,
            mean,
            factor,
            var_f,
            rho_sq: (explained / var_f).clamp(0.0, 1.0),
        })
    }
}

impl Population for GaussianPopulation {
    fn d(&self) -> usize {
        self.d
    }

    fn m(&self) -> usize {
        0
    }

    fn mean_f(&self) -> f64 {
        self.mean[self.d]
    }

    fn var_f(&self) -> f64 {
        self.var_f
    }

    fn rho_sq(&self) -> f64 {
        self.rho_sq
    }

    fn draw(&self, rng: &mut ChaCha8Rng, g: &mut [f64], _phi: &mut [f64]) -> f64 {
        let p = self.d + 1;
        let mut buf = [0.0f64; 16];
        let mut heap = Vec::new();
        let z: &mut [f64] = if p <= buf.len() {
            &mut buf[..p]
        } else {
            heap.resize(p, 0.0);
            &mut heap
        };
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let row = |a: usize| -> f64 {
            self.mean[a] + (0..=a).map(|b| self.factor[a * p + b] * z[b]).sum::<f64>()
        };
        for (a, slot) in g.iter_mut().enumerate() {
            *slot = row(a);
        }
        row(self.d)
    }
}

/// Regime-switching population in which `F` is predictable from `(G, X)`
/// but nearly uncorrelated with `G` alone:
///
/// `X ~ U[-1, 1]^m`, `G = 1 + 0.5 X_2 + e_g`, `F = sign(X_1) G + e_f`,
/// with Gaussian noise of standard deviations `noise_g`, `noise_f`.
/// Features are `phi = X`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearPopulation {
    m: usize,
    noise_g: f64,
    noise_f: f64,
    probe_rho: f64,
}

impl NonlinearPopulation {
    pub const PROBE_SAMPLES: usize = 100_000;
    pub const MAX_RAW_RHO: f64 = 0.2;

    /// Builds the population and checks `|corr(G, F)| < 0.2` on
    /// [`Self::PROBE_SAMPLES`] draws.
    pub fn new(m: usize, noise_g: f64, noise_f: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!("the regime switch needs m >= 2 features, got {m}")));
        }
        if !(noise_g >= 0.0 && noise_f >= 0.0 && noise_g.is_finite() && noise_f.is_finite()) {
            return Err(Error::InvalidArgument("noise scales must be finite and non-negative".into()));
        }
        let mut pop = Self {
            m,
            noise_g,
            noise_f,
            probe_rho: 0.0,
        };
        let (paired, _) = sample_population(&pop, Self::PROBE_SAMPLES, 0, 0x9e37_79b9)?;
        pop.probe_rho = pearson(paired.f(), paired.g());
        if pop.probe_rho.abs() >= Self::MAX_RAW_RHO {
            return Err(Error::Invariant(format!(
                "probe correlation {} exceeds {}",
                pop.probe_rho,
                Self::MAX_RAW_RHO
            )));
        }
        Ok(pop)
    }

    /// Fixture used by the CLI and the tests: two features, moderate noise.
    pub fn standard() -> Self {
        Self::new(2, 0.3, 0.3).expect("standard parameters satisfy the probe check")
    }

    /// Correlation between `F` and `G` measured on the probe draws.
    pub fn probe_rho(&self) -> f64 {
        self.probe_rho
    }

    fn second_moment_g(&self) -> f64 {
        // E[G]^2 + Var(0.5 X_2) + noise.
        1.0 + 0.25 / 3.0 + self.noise_g * self.noise_g
    }
}

impl Population for NonlinearPopulation {
    fn d(&self) -> usize {
        1
    }

    fn m(&self) -> usize {
        self.m
    }

    fn mean_f(&self) -> f64 {
        0.0
    }

    fn var_f(&self) -> f64 {
        self.second_moment_g() + self.noise_f * self.noise_f
    }

    /// `sign(X_1)` is independent of `G` with mean zero, so the population
    /// covariance vanishes.
    fn rho_sq(&self) -> f64 {
        0.0
    }

    fn draw(&self, rng: &mut ChaCha8Rng, g: &mut [f64], phi: &mut [f64]) -> f64 {
        for x in phi.iter_mut() {
            *x = rng.gen_range(-1.0..=1.0);
        }
        let e_g: f64 = rng.sample(StandardNormal);
        let e_f: f64 = rng.sample(StandardNormal);
        g[0] = 1.0 + 0.5 * phi[1] + self.noise_g * e_g;
        let s = if phi[0] >= 0.0 { 1.0 } else { -1.0 };
        s * g[0] + self.noise_f * e_f
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn sample_with(
    pop: &dyn Population,
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(PairedDataset, SurrogateDataset)> {
    let (d, m) = (pop.d(), pop.m());
    let mut f = Vec::with_capacity(n);
    let mut g = vec![0.0; n * d];
    let mut phi = vec![0.0; n * m];
    for i in 0..n {
        f.push(pop.draw(rng, &mut g[i * d..(i + 1) * d], &mut phi[i * m..(i + 1) * m]));
    }
    let mut pool_g = vec![0.0; k * d];
    let mut pool_phi = vec![0.0; k * m];
    for i in 0..k {
        pop.draw(rng, &mut pool_g[i * d..(i + 1) * d], &mut pool_phi[i * m..(i + 1) * m]);
    }
    Ok((
        PairedDataset::from_parts(None, f, g, phi, d, m)?,
        SurrogateDataset::from_parts(None, k, pool_g, pool_phi, d, m)?,
    ))
}

/// `n` paired and `k` surrogate-only i.i.d. draws.
pub fn sample_population(
    pop: &dyn Population,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(PairedDataset, SurrogateDataset)> {
    if n < 2 {
        return Err(Error::EmptyDataset { required: 2, got: n });
    }
    sample_with(pop, n, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct McfTrialConfig {
    pub n_fit: usize,
    /// `seed` is replaced per trial.
    pub config: McfConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub ci: CiSpec,
    pub seed: u64,
    pub mcf: Option<McfTrialConfig>,
}

impl TrialConfig {
    pub fn new(n: usize, k: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            k,
            trials,
            methods: vec![Method::MonteCarlo, Method::ControlVariates],
            ci: CiSpec::default(),
            seed,
            mcf: None,
        }
    }

    pub fn with_mcf(mut self, n_fit: usize, config: McfConfig) -> Self {
        if !self.methods.contains(&Method::ControlVariatesMcf) {
            self.methods.push(Method::ControlVariatesMcf);
        }
        self.mcf = Some(McfTrialConfig { n_fit, config });
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 trials, got {}", self.trials)));
        }
        if self.n < 2 {
            return Err(Error::EmptyDataset { required: 2, got: self.n });
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        if self.methods.contains(&Method::ControlVariatesMcf) {
            let mcf = self
                .mcf
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("CV_MCF trials need a correlator configuration".into()))?;
            if self.n < mcf.n_fit + 2 {
                return Err(Error::InvalidSplit(format!(
                    "n_fit = {} leaves fewer than 2 of {} samples for estimation",
                    mcf.n_fit, self.n
                )));
            }
            mcf.config.validate()?;
        }
        Ok(())
    }
}

/// Across-trial statistics for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Paired samples entering the estimate itself.
    pub n_used: usize,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub theory_var: f64,
    pub rel_err: f64,
    /// Standard error of `emp_mean`.
    pub std_err: f64,
    pub coverage: f64,
    pub mean_var_hat: f64,
    /// Mean plug-in squared correlation; for CV_MCF it is measured on the
    /// estimation rows, which the correlator never saw.
    pub mean_rho_sq: Option<f64>,
    /// Fraction of trials in which the correlator passed the net-reduction
    /// test against the raw surrogates.
    pub worthwhile_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub grid_value: f64,
    pub n: usize,
    pub k: usize,
    pub n_fit: Option<usize>,
    pub trials: usize,
    pub true_mean: f64,
    pub var_f: f64,
    pub population_rho_sq: f64,
    pub methods: Vec<MethodSummary>,
}

impl TrialReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    mu: f64,
    var_hat: f64,
    covered: bool,
    rho_sq: f64,
    worthwhile: bool,
}

fn run_one(pop: &dyn Population, cfg: &TrialConfig, trial: usize) -> Result<Vec<Outcome>> {
    let mut rng = trial_rng(cfg.seed, trial);
    let (paired, pool) = sample_with(pop, cfg.n, cfg.k, &mut rng)?;
    let split_seed: u64 = rng.gen();
    let train_seed: u64 = rng.gen();
    let truth = pop.mean_f();
    cfg.methods
        .iter()
        .map(|&method| {
            let (report, worthwhile) = match method {
                Method::MonteCarlo => (mc_estimate(paired.f())?.with_ci(cfg.ci)?, false),
                Method::ControlVariates => (run_cv_pipeline(&paired, &pool, Some(cfg.ci))?, false),
                Method::ControlVariatesMcf => {
                    let mcf = cfg.mcf.as_ref().expect("validated");
                    let config = McfConfig {
                        seed: train_seed,
                        ..mcf.config.clone()
                    };
                    let split = SplitSpec::shuffled(mcf.n_fit, split_seed);
                    let out = run_cv_mcf_pipeline(&paired, &pool, &split, &config, Some(cfg.ci), None)?;
                    (out.report, out.worthwhile)
                }
            };
            Ok(Outcome {
                mu: report.mu_hat,
                var_hat: report.var_hat,
                covered: report.ci.is_some_and(|ci| ci.contains(truth)),
                rho_sq: report.rho_sq.unwrap_or(0.0),
                worthwhile,
            })
        })
        .collect()
}

/// Runs `cfg.trials` independent draw-and-estimate rounds.
///
/// Theoretical variances use population moments: `var_f / n` for MC and
/// the optimal-coefficient formula with the population `rho^2` for CV. The
/// correlator's population `rho^2` is unknown, so CV_MCF uses the mean
/// measured value with `n_est` paired samples.
pub fn run_trials(pop: &dyn Population, cfg: &TrialConfig, grid_value: f64) -> Result<TrialReport> {
    cfg.validate()?;
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_one(pop, cfg, t))
        .collect::<Result<_>>()?;

    let m = cfg.trials as f64;
    let truth = pop.mean_f();
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let column = || outcomes.iter().map(move |o| o[j]);
            let emp_mean = column().map(|o| o.mu).sum::<f64>() / m;
            let emp_var = column().map(|o| (o.mu - emp_mean).powi(2)).sum::<f64>() / (m - 1.0);
            let coverage = column().filter(|o| o.covered).count() as f64 / m;
            let mean_var_hat = column().map(|o| o.var_hat).sum::<f64>() / m;
            let mean_rho_sq = column().map(|o| o.rho_sq).sum::<f64>() / m;
            let (n_used, theory_var, rho, worthwhile_rate) = match method {
                Method::MonteCarlo => (cfg.n, pop.var_f() / cfg.n as f64, None, None),
                Method::ControlVariates => (
                    cfg.n,
                    cv_variance_theoretical(pop.var_f(), pop.rho_sq(), cfg.n, cfg.k),
                    Some(mean_rho_sq),
                    None,
                ),
                Method::ControlVariatesMcf => {
                    let n_est = cfg.n - cfg.mcf.as_ref().expect("validated").n_fit;
                    let rate = column().filter(|o| o.worthwhile).count() as f64 / m;
                    (
                        n_est,
                        cv_variance_theoretical(pop.var_f(), mean_rho_sq, n_est, cfg.k),
                        Some(mean_rho_sq),
                        Some(rate),
                    )
                }
            };
            MethodSummary {
                method,
                n_used,
                emp_mean,
                emp_var,
                theory_var,
                rel_err: (emp_var - theory_var).abs() / theory_var,
                std_err: (emp_var / m).sqrt(),
                coverage,
                mean_var_hat,
                mean_rho_sq: rho,
                worthwhile_rate,
            }
        })
        .collect();

    Ok(TrialReport {
        grid_value,
        n: cfg.n,
        k: cfg.k,
        n_fit: cfg.mcf.as_ref().filter(|_| cfg.methods.contains(&Method::ControlVariatesMcf)).map(|c| c.n_fit),
        trials: cfg.trials,
        true_mean: truth,
        var_f: pop.var_f(),
        population_rho_sq: pop.rho_sq(),
        methods,
    })
}

/// One report per pool size in `k_grid`. Trials reuse the same streams at
/// every grid point.
pub fn sweep_k(pop: &dyn Population, base: &TrialConfig, k_grid: &[usize]) -> Result<Vec<TrialReport>> {
    if k_grid.is_empty() {
        return Err(Error::InvalidArgument("empty k grid".into()));
    }
    k_grid
        .iter()
        .map(|&k| run_trials(pop, &TrialConfig { k, ..base.clone() }, k as f64))
        .collect()
}

/// One report per fit fraction; `n_fit = round(fraction * n)`. A point with
/// `n_fit = 0` has no training data and reports only the other methods.
pub fn sweep_fit_fraction(
    pop: &dyn Population,
    base: &TrialConfig,
    config: &McfConfig,
    fractions: &[f64],
) -> Result<Vec<TrialReport>> {
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("empty fraction grid".into()));
    }
    fractions
        .iter()
        .map(|&frac| {
            if !(0.0..1.0).contains(&frac) {
                return Err(Error::InvalidArgument(format!("fit fraction must lie in [0, 1), got {frac}")));
            }
            let n_fit = (frac * base.n as f64).round() as usize;
            let mut cfg = base.clone();
            cfg.methods.retain(|&m| m != Method::ControlVariatesMcf);
            if n_fit > 0 {
                cfg = cfg.with_mcf(n_fit, config.clone());
            } else {
                cfg.mcf = None;
            }
            run_trials(pop, &cfg, frac)
        })
        .collect()
}

pub const CSV_HEADER: [&str; 6] = ["grid_value", "method", "emp_var", "theory_var", "rel_err", "M"];

/// Plot-ready table with one row per (grid point, method).
pub fn write_csv<W: Write>(reports: &[TrialReport], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER).map_err(csv_io)?;
    for r in reports {
        for s in &r.methods {
            out.write_record([
                r.grid_value.to_string(),
                s.method.as_str().to_string(),
                s.emp_var.to_string(),
                s.theory_var.to_string(),
                s.rel_err.to_string(),
                r.trials.to_string(),
            ])
            .map_err(csv_io)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlation() {
        let pop = GaussianPopulation::with_rho(1.0, 2.0, 1, 1.0).unwrap();
        let (paired, _) = sample_population(&pop, 10_000, 0, 1).unwrap();
        assert!(pearson(paired.f(), paired.g()) > 0.999);
    }

    #[test]
    fn independence() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 1, 0.0).unwrap();
        let (paired, _) = sample_population(&pop, 10_000, 0, 2).unwrap();
        assert!(pearson(paired.f(), paired.g()).abs() < 0.05);
    }

    #[test]
    fn sampling_is_deterministic() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 3, 0.5).unwrap();
        let a = sample_population(&pop, 50, 20, 7).unwrap();
        let b = sample_population(&pop, 50, 20, 7).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.g(), b.1.g());
    }

    #[test]
    fn sample_moments_match_population() {
        let pop = GaussianPopulation::with_rho(3.0, 4.0, 2, -0.6).unwrap();
        let (paired, _) = sample_population(&pop, 200_000, 0, 3).unwrap();
        let f = paired.f();
        let n = f.len() as f64;
        let mean = f.iter().sum::<f64>() / n;
        let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 3.0).abs() < 0.02);
        assert!((var - 4.0).abs() < 0.05);
        let s: Vec<f64> = paired.g().chunks(2).map(|r| r[0] + r[1]).collect();
        assert!((pearson(f, &s) + 0.6).abs() < 0.01);
    }

    #[test]
    fn covariance_form_matches_scalar_form() {
        // F with var 4, G ~ N(0, 1), corr 0.5 -> cov = 1.
        let pop = GaussianPopulation::with_covariance(1.0, &[0.0], &[4.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((pop.rho_sq() - 0.25).abs() < 1e-9);
        let scalar = GaussianPopulation::with_rho(1.0, 4.0, 1, 0.5).unwrap();
        let a = sample_population(&pop, 100, 0, 5).unwrap().0;
        let b = sample_population(&scalar, 100, 0, 5).unwrap().0;
        for (x, y) in a.f().iter().zip(b.f()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(GaussianPopulation::with_covariance(0.0, &[0.0], &[1.0, 2.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn nonlinear_probe_is_weak() {
        let pop = NonlinearPopulation::standard();
        assert!(pop.probe_rho().abs() < 0.2);
        let (paired, _) = sample_population(&pop, 100_000, 0, 9).unwrap();
        let f = paired.f();
        let n = f.len() as f64;
        let mean = f.iter().sum::<f64>() / n;
        let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - pop.var_f()).abs() < 0.02 * pop.var_f(), "{var} vs {}", pop.var_f());
    }

    #[test]
    fn trials_are_reproducible_and_order_independent() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 1, 0.5).unwrap();
        let cfg = TrialConfig::new(20, 40, 50, 11);
        let a = run_trials(&pop, &cfg, 0.0).unwrap();
        let b = run_trials(&pop, &cfg, 0.0).unwrap();
        assert_eq!(a, b);
        let serial: Vec<_> = (0..cfg.trials).rev().map(|t| run_one(&pop, &cfg, t).unwrap()[0].mu).collect();
        let mean = serial.iter().sum::<f64>() / serial.len() as f64;
        assert!((mean - a.methods[0].emp_mean).abs() < 1e-12);
    }

    #[test]
    fn empty_pool_collapses_to_mc() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 1, 0.9).unwrap();
        let r = run_trials(&pop, &TrialConfig::new(30, 0, 200, 4), 0.0).unwrap();
        let mc = r.method(Method::MonteCarlo).unwrap();
        let cv = r.method(Method::ControlVariates).unwrap();
        assert_eq!(mc.emp_var, cv.emp_var);
        assert_eq!(mc.theory_var, cv.theory_var);
    }

    #[test]
    fn k_sweep_theory_decreases() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 1, 0.9).unwrap();
        let base = TrialConfig::new(100, 0, 20, 1);
        let reports = sweep_k(&pop, &base, &[0, 100, 1000]).unwrap();
        let theory: Vec<f64> = reports
            .iter()
            .map(|r| r.method(Method::ControlVariates).unwrap().theory_var)
            .collect();
        assert!(theory[0] > theory[1] && theory[1] > theory[2]);
        assert_eq!(sweep_k(&pop, &base, &[10]).unwrap().len(), 1);
    }

    #[test]
    fn csv_layout() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 1, 0.3).unwrap();
        let reports = sweep_k(&pop, &TrialConfig::new(10, 0, 5, 1), &[0, 10]).unwrap();
        let mut buf = Vec::new();
        write_csv(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "grid_value,method,emp_var,theory_var,rel_err,M");
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert!(lines[1].starts_with("0,MC,"));
        assert!(lines[4].starts_with("10,CV,") && lines[4].ends_with(",5"));
    }

    #[test]
    fn config_validation() {
        let pop = GaussianPopulation::with_rho(0.0, 1.0, 1, 0.3).unwrap();
        assert!(run_trials(&pop, &TrialConfig::new(10, 5, 1, 0), 0.0).is_err());
        let mut cfg = TrialConfig::new(10, 5, 5, 0);
        cfg.methods.push(Method::ControlVariatesMcf);
        assert!(run_trials(&pop, &cfg, 0.0).is_err());
        let cfg = TrialConfig::new(10, 5, 5, 0).with_mcf(9, McfConfig::ols());
        assert!(matches!(run_trials(&pop, &cfg, 0.0), Err(Error::InvalidSplit(_))));
    }
}
