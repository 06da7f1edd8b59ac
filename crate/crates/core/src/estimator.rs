//! Closed-form estimation: the Monte Carlo baseline, the control-variates
//! estimator with its optimal coefficient, theoretical and plug-in
//! variances, Chebyshev intervals, and the paired-sample planner.
//!
//! All covariances use the unbiased `n - 1` divisor. Solves against the
//! surrogate covariance go through [`crate::linalg::RidgedCholesky`], which
//! only regularizes matrices that are not numerically positive definite.

use serde::{Deserialize, Serialize};

use crate::data::{check_compatibility, PairedDataset, SurrogateDataset};
use crate::error::{Error, Result};
use crate::linalg::{dot, RidgedCholesky};

/// Sample moments of `(F, G)` over a paired dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub mean_f: f64,
    pub var_f: f64,
    pub mean_g: Vec<f64>,
    /// Row-major `d x d`, exactly symmetric.
    pub var_g: Vec<f64>,
    pub cov_gf: Vec<f64>,
}

impl MomentSummary {
    /// Moments from a target column and a row-major `n x d` surrogate matrix.
    pub fn from_columns(f: &[f64], g: &[f64], d: usize) -> Result<Self> {
        let n = f.len();
        if n < 2 {
            return Err(Error::EmptyDataset {
                required: 2,
                got: n,
            });
        }
        if g.len() != n * d {
            return Err(Error::DimensionMismatch {
                context: "surrogate matrix",
                expected: n * d,
                got: g.len(),
            });
        }
        let nf = n as f64;
        let mean_f = mean(f);
        let mut mean_g = vec![0.0; d];
        if d > 0 {
            for row in g.chunks_exact(d) {
                for (acc, v) in mean_g.iter_mut().zip(row) {
                    *acc += v;
                }
            }
        }
        for v in &mut mean_g {
            *v /= nf;
        }

        let mut var_f = 0.0;
        let mut var_g = vec![0.0; d * d];
        let mut cov_gf = vec![0.0; d];
        let mut centered = vec![0.0; d];
        for i in 0..n {
            let df = f[i] - mean_f;
            var_f += df * df;
            for a in 0..d {
                centered[a] = g[i * d + a] - mean_g[a];
                cov_gf[a] += centered[a] * df;
            }
            for a in 0..d {
                for b in 0..=a {
                    var_g[a * d + b] += centered[a] * centered[b];
                }
            }
        }
        let denom = nf - 1.0;
        var_f /= denom;
        for v in &mut cov_gf {
            *v /= denom;
        }
        for a in 0..d {
            for b in 0..=a {
                let v = var_g[a * d + b] / denom;
                var_g[a * d + b] = v;
                var_g[b * d + a] = v;
            }
        }
        Ok(Self {
            n,
            mean_f,
            var_f,
            mean_g,
            var_g,
            cov_gf,
        })
    }

    pub fn d(&self) -> usize {
        self.mean_g.len()
    }
}

pub fn compute_moments(paired: &PairedDataset) -> Result<MomentSummary> {
    MomentSummary::from_columns(paired.f(), paired.g(), paired.d())
}

/// Control-variate coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beta(pub Vec<f64>);

impl Beta {
    pub fn zeros(d: usize) -> Self {
        Beta(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0.0)
    }

    /// `beta^T g`.
    pub fn apply(&self, g: &[f64]) -> f64 {
        dot(&self.0, g)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }
}

/// Plug-in optimal coefficient `k/(k+n) * Var(G)^-1 Cov(G, F)`.
pub fn beta_opt(moments: &MomentSummary, k: usize) -> Result<Beta> {
    let d = moments.d();
    if k == 0 || d == 0 {
        return Ok(Beta::zeros(d));
    }
    let scale = k as f64 / (k + moments.n) as f64;
    let solved = RidgedCholesky::new(&moments.var_g, d)?.solve(&moments.cov_gf);
    Ok(Beta(solved.into_iter().map(|b| scale * b).collect()))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sum of squared deviations from the mean, divided by `n - 1`, then by `n`.
fn variance_of_mean(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    ss / (n - 1.0) / n
}

fn check_beta(paired: &PairedDataset, surrogate: &SurrogateDataset, beta: &Beta) -> Result<()> {
    if beta.dim() != paired.d() {
        return Err(Error::DimensionMismatch {
            context: "coefficient vector",
            expected: paired.d(),
            got: beta.dim(),
        });
    }
    if !surrogate.is_empty() && surrogate.d() != paired.d() {
        return Err(Error::DimensionMismatch {
            context: "surrogate dimension",
            expected: paired.d(),
            got: surrogate.d(),
        });
    }
    if beta.0.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidArgument("coefficient vector is not finite".into()));
    }
    Ok(())
}

fn residuals(paired: &PairedDataset, beta: &Beta) -> Vec<f64> {
    (0..paired.len())
        .map(|i| paired.f()[i] - beta.apply(paired.g_row(i)))
        .collect()
}

fn projected_pool(surrogate: &SurrogateDataset, beta: &Beta) -> Vec<f64> {
    (0..surrogate.len())
        .map(|j| beta.apply(surrogate.g_row(j)))
        .collect()
}

/// `(1/n) sum(F_i - beta^T G_i) + (1/k) sum(beta^T G'_j)`.
///
/// With `beta = 0` the surrogate term is exactly zero, so the result equals
/// the sample mean of `F` bit for bit.
pub fn cv_estimate(paired: &PairedDataset, surrogate: &SurrogateDataset, beta: &Beta) -> Result<f64> {
    check_beta(paired, surrogate, beta)?;
    if paired.is_empty() {
        return Err(Error::EmptyDataset {
            required: 1,
            got: 0,
        });
    }
    let paired_term = mean(&residuals(paired, beta));
    if beta.is_zero() {
        return Ok(paired_term);
    }
    if surrogate.is_empty() {
        return Err(Error::EmptySurrogate {
            required: 1,
            got: 0,
        });
    }
    Ok(paired_term + mean(&projected_pool(surrogate, beta)))
}

/// `Cov(F, G) Var(G)^-1 Cov(G, F) / Var(F)`, clamped to `[0, 1]`.
pub fn rho_squared(moments: &MomentSummary) -> Result<f64> {
    if !(moments.var_f > 0.0) {
        return Err(Error::DegenerateTarget);
    }
    let d = moments.d();
    if d == 0 {
        return Ok(0.0);
    }
    let solved = RidgedCholesky::new(&moments.var_g, d)?.solve(&moments.cov_gf);
    let rho_sq = dot(&moments.cov_gf, &solved) / moments.var_f;
    Ok(rho_sq.clamp(0.0, 1.0))
}

/// `(1/n) (1 - k/(k+n) rho^2) Var(F)`.
pub fn cv_variance_theoretical(var_f: f64, rho_sq: f64, n: usize, k: usize) -> f64 {
    let n_f = n as f64;
    let shrink = k as f64 / (k + n) as f64;
    (1.0 - shrink * rho_sq) * var_f / n_f
}

/// Variance of the CV estimator for a fixed `beta` as a function of the
/// population moments:
/// `Var(F)/n - 2/n beta^T Cov(G,F) + (n+k)/(nk) beta^T Var(G) beta`.
///
/// Infinite when `k = 0` and `beta != 0`.
pub fn variance_quadratic(moments: &MomentSummary, beta: &Beta, n: usize, k: usize) -> f64 {
    let d = moments.d();
    let n_f = n as f64;
    let quad: f64 = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| beta.0[a] * moments.var_g[a * d + b] * beta.0[b])
                .sum::<f64>()
        })
        .sum();
    let cross = dot(&beta.0, &moments.cov_gf);
    let pool_weight = if k == 0 {
        if quad == 0.0 {
            0.0
        } else {
            return f64::INFINITY;
        }
    } else {
        (n + k) as f64 / (n_f * k as f64)
    };
    moments.var_f / n_f - 2.0 / n_f * cross + pool_weight * quad
}

/// Plug-in variance of the CV estimate:
/// the variance of the mean of the residuals `F_i - beta^T G_i`, plus the
/// variance of the mean of the projected pool `beta^T G'_j`.
pub fn cv_variance_plugin(
    paired: &PairedDataset,
    surrogate: &SurrogateDataset,
    beta: &Beta,
) -> Result<f64> {
    check_beta(paired, surrogate, beta)?;
    if paired.len() < 2 {
        return Err(Error::EmptyDataset {
            required: 2,
            got: paired.len(),
        });
    }
    let paired_term = variance_of_mean(&residuals(paired, beta));
    if beta.is_zero() {
        return Ok(paired_term);
    }
    if surrogate.len() < 2 {
        return Err(Error::EmptySurrogate {
            required: 2,
            got: surrogate.len(),
        });
    }
    Ok(paired_term + variance_of_mean(&projected_pool(surrogate, beta)))
}

/// A symmetric interval `center +/- radius` that misses the mean with
/// probability at most `failure_prob`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub radius: f64,
    #[serde(rename = "delta")]
    pub failure_prob: f64,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.center + self.radius
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }
}

/// Chebyshev interval with radius `sqrt(var / delta)`.
pub fn chebyshev_interval(mu_hat: f64, var_hat: f64, delta: f64) -> Result<ConfidenceInterval> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if !(var_hat >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variance must be non-negative, got {var_hat}"
        )));
    }
    Ok(ConfidenceInterval {
        center: mu_hat,
        radius: (var_hat / delta).sqrt(),
        failure_prob: delta,
    })
}

/// Chebyshev bound on `P(|mu_hat - mu| >= alpha)`, clamped to 1.
pub fn chebyshev_tail(var_hat: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok((var_hat / (alpha * alpha)).min(1.0))
}

/// Minimum paired-sample count for the CV estimator to match the Chebyshev
/// interval of a Monte Carlo estimate on `n_r` samples, given `k` pool
/// samples and squared correlation `rho_sq`. Real valued; round up to plan.
pub fn min_paired_samples(n_r: usize, k: usize, rho_sq: f64) -> f64 {
    let n_r = n_r as f64;
    let k = k as f64;
    let b = k - n_r;
    let disc = b * b + 4.0 * n_r * k * (1.0 - rho_sq);
    (-b + disc.max(0.0).sqrt()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MC")]
    MonteCarlo,
    #[serde(rename = "CV")]
    ControlVariates,
    #[serde(rename = "CV_MCF")]
    ControlVariatesMcf,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "MC",
            Method::ControlVariates => "CV",
            Method::ControlVariatesMcf => "CV_MCF",
        }
    }
}

/// How to attach a confidence statement to an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiSpec {
    /// Fixed failure probability; the radius follows.
    Delta(f64),
    /// Fixed half-width; the failure probability follows.
    Alpha(f64),
}

impl Default for CiSpec {
    fn default() -> Self {
        CiSpec::Delta(0.1)
    }
}

impl CiSpec {
    pub fn interval(self, mu_hat: f64, var_hat: f64) -> Result<ConfidenceInterval> {
        match self {
            CiSpec::Delta(delta) => chebyshev_interval(mu_hat, var_hat, delta),
            CiSpec::Alpha(alpha) => Ok(ConfidenceInterval {
                center: mu_hat,
                radius: alpha,
                failure_prob: chebyshev_tail(var_hat, alpha)?,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub mu_hat: f64,
    pub var_hat: f64,
    pub beta: Option<Beta>,
    pub rho_sq: Option<f64>,
    /// Squared correlation of the raw surrogates; set for CV-MCF reports.
    pub rho_sq_raw: Option<f64>,
    #[serde(rename = "n")]
    pub n_used: usize,
    #[serde(rename = "k")]
    pub k_used: usize,
    pub ci: Option<ConfidenceInterval>,
}

impl EstimateReport {
    pub fn with_ci(mut self, ci: CiSpec) -> Result<Self> {
        self.ci = Some(ci.interval(self.mu_hat, self.var_hat)?);
        Ok(self)
    }
}

/// Sample mean of `F` and the unbiased variance of that mean.
pub fn mc_estimate(f_values: &[f64]) -> Result<EstimateReport> {
    if f_values.len() < 2 {
        return Err(Error::EmptyDataset {
            required: 2,
            got: f_values.len(),
        });
    }
    Ok(EstimateReport {
        method: Method::MonteCarlo,
        mu_hat: mean(f_values),
        var_hat: variance_of_mean(f_values),
        beta: None,
        rho_sq: None,
        rho_sq_raw: None,
        n_used: f_values.len(),
        k_used: 0,
        ci: None,
    })
}

/// Plug-in coefficient, CV estimate, plug-in variance and (optionally) a
/// Chebyshev statement, all from the same paired data.
pub fn run_cv_pipeline(
    paired: &PairedDataset,
    surrogate: &SurrogateDataset,
    ci: Option<CiSpec>,
) -> Result<EstimateReport> {
    check_compatibility(paired, surrogate, false)?;
    let moments = compute_moments(paired)?;
    let k = surrogate.len();
    let beta = beta_opt(&moments, k)?;
    let mu_hat = cv_estimate(paired, surrogate, &beta)?;
    let var_hat = cv_variance_plugin(paired, surrogate, &beta)?;
    let rho_sq = match rho_squared(&moments) {
        Ok(r) => r,
        Err(Error::DegenerateTarget) => 0.0,
        Err(e) => return Err(e),
    };
    let report = EstimateReport {
        method: Method::ControlVariates,
        mu_hat,
        var_hat,
        beta: Some(beta),
        rho_sq: Some(rho_sq),
        rho_sq_raw: None,
        n_used: paired.len(),
        k_used: k,
        ci: None,
    };
    match ci {
        Some(ci) => report.with_ci(ci),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paired(f: &[f64], g: &[f64], d: usize) -> PairedDataset {
        PairedDataset::from_columns(f.to_vec(), g.to_vec(), d).unwrap()
    }

    fn pool(g: &[f64], d: usize) -> SurrogateDataset {
        SurrogateDataset::from_columns(g.to_vec(), d).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mc_constant() {
        let r = mc_estimate(&[1.0; 4]).unwrap();
        assert_eq!((r.mu_hat, r.var_hat), (1.0, 0.0));
    }

    #[test]
    fn mc_two_points() {
        let r = mc_estimate(&[0.0, 2.0]).unwrap();
        assert_eq!((r.mu_hat, r.var_hat), (1.0, 1.0));
    }

    #[test]
    fn mc_four_points() {
        let r = mc_estimate(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.mu_hat, 2.5);
        assert!(close(r.var_hat, 5.0 / 3.0 / 4.0, 1e-15));
    }

    #[test]
    fn mc_needs_two() {
        assert!(matches!(mc_estimate(&[1.0]), Err(Error::EmptyDataset { .. })));
    }

    #[test]
    fn moments_two_points() {
        let m = compute_moments(&paired(&[1.0, 2.0], &[1.0, 2.0], 1)).unwrap();
        assert_eq!(m.cov_gf, vec![0.5]);
        assert_eq!(m.var_g, vec![0.5]);
        assert_eq!(m.var_f, 0.5);
    }

    #[test]
    fn moments_constant_surrogate() {
        let m = compute_moments(&paired(&[1.0, 2.0, 4.0], &[3.0, 1.0, 3.0, 1.0, 3.0, 1.0], 2)).unwrap();
        assert!(m.var_g.iter().all(|&v| v == 0.0));
        assert!(m.cov_gf.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn beta_unit_slope_halved() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let m = compute_moments(&paired(&xs, &xs, 1)).unwrap();
        let b = beta_opt(&m, 4).unwrap();
        assert!(close(b.0[0], 0.5, 1e-9));
    }

    #[test]
    fn beta_zero_pool() {
        let m = compute_moments(&paired(&[1.0, 5.0, 2.0], &[0.0, 3.0, 1.0], 1)).unwrap();
        assert_eq!(beta_opt(&m, 0).unwrap(), Beta::zeros(1));
    }

    #[test]
    fn beta_identity_covariance() {
        let m = MomentSummary {
            n: 10,
            mean_f: 0.0,
            var_f: 2.0,
            mean_g: vec![0.0, 0.0],
            var_g: vec![1.0, 0.0, 0.0, 1.0],
            cov_gf: vec![1.0, 0.0],
        };
        let b = beta_opt(&m, 10).unwrap();
        assert!(close(b.0[0], 0.5, 1e-9) && b.0[1].abs() < 1e-12);
    }

    #[test]
    fn beta_singular() {
        let m = compute_moments(&paired(&[1.0, 2.0], &[3.0, 3.0], 1)).unwrap();
        assert!(matches!(beta_opt(&m, 5), Err(Error::SingularCovariance { .. })));
    }

    #[test]
    fn cv_estimate_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let p = paired(&xs, &xs, 1);
        let s = pool(&[5.0, 6.0, 7.0, 8.0], 1);
        assert_eq!(cv_estimate(&p, &s, &Beta(vec![0.5])).unwrap(), 4.5);

        let p = paired(&[1.0, 2.0], &[1.0, 2.0], 1);
        let s = pool(&[1.0, 2.0], 1);
        assert_eq!(cv_estimate(&p, &s, &Beta(vec![1.0])).unwrap(), 1.5);
    }

    #[test]
    fn cv_estimate_zero_beta_is_mc() {
        let f = [0.3, -1.7, 2.25, 9.0];
        let p = paired(&f, &[1.0, 2.0, 3.0, 4.0], 1);
        let mc = mc_estimate(&f).unwrap().mu_hat;
        assert_eq!(cv_estimate(&p, &SurrogateDataset::empty(1, 0), &Beta::zeros(1)).unwrap(), mc);
        assert_eq!(cv_estimate(&p, &pool(&[7.0, 8.0], 1), &Beta::zeros(1)).unwrap(), mc);
    }

    #[test]
    fn cv_estimate_errors() {
        let p = paired(&[1.0, 2.0], &[1.0, 2.0], 1);
        assert!(matches!(
            cv_estimate(&p, &SurrogateDataset::empty(1, 0), &Beta(vec![1.0])),
            Err(Error::EmptySurrogate { .. })
        ));
        assert!(matches!(
            cv_estimate(&p, &pool(&[1.0, 2.0], 2), &Beta(vec![1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rho_sq_examples() {
        let m = compute_moments(&paired(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0], 1)).unwrap();
        assert!(close(rho_squared(&m).unwrap(), 1.0, 1e-9));

        let m = MomentSummary {
            n: 5,
            mean_f: 0.0,
            var_f: 1.0,
            mean_g: vec![0.0],
            var_g: vec![1.0],
            cov_gf: vec![0.0],
        };
        assert_eq!(rho_squared(&m).unwrap(), 0.0);

        let m = compute_moments(&paired(&[1.0, 1.0], &[1.0, 2.0], 1)).unwrap();
        assert!(matches!(rho_squared(&m), Err(Error::DegenerateTarget)));
    }

    #[test]
    fn theoretical_variance_examples() {
        assert_eq!(cv_variance_theoretical(2.0, 0.0, 10, 1000), 0.2);
        assert_eq!(cv_variance_theoretical(2.0, 1.0, 10, 10), 0.1);
        assert_eq!(cv_variance_theoretical(2.0, 0.7, 10, 0), 0.2);
    }

    #[test]
    fn plugin_variance_examples() {
        let f = [0.5, 1.5, -2.0, 4.0];
        let p = paired(&f, &[1.0, 0.0, 2.0, 1.0], 1);
        assert_eq!(
            cv_variance_plugin(&p, &SurrogateDataset::empty(1, 0), &Beta::zeros(1)).unwrap(),
            mc_estimate(&f).unwrap().var_hat
        );

        let xs = [1.0, 3.0, 4.0, 8.0];
        let p = paired(&xs, &xs, 1);
        let g_pool = [2.0, 5.0, 9.0];
        let s = pool(&g_pool, 1);
        let v = cv_variance_plugin(&p, &s, &Beta(vec![1.0])).unwrap();
        assert!(close(v, mc_estimate(&g_pool).unwrap().var_hat, 1e-15));

        let p = paired(&[0.0, 2.0], &[0.0, 2.0], 1);
        let s = pool(&[0.0, 2.0], 1);
        assert_eq!(cv_variance_plugin(&p, &s, &Beta(vec![0.5])).unwrap(), 0.5);
    }

    #[test]
    fn plugin_variance_small_pool() {
        let p = paired(&[0.0, 2.0], &[0.0, 2.0], 1);
        assert!(matches!(
            cv_variance_plugin(&p, &pool(&[1.0], 1), &Beta(vec![0.5])),
            Err(Error::EmptySurrogate { .. })
        ));
        cv_variance_plugin(&p, &pool(&[1.0], 1), &Beta::zeros(1)).unwrap();
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_interval(0.0, 1.0, 0.04).unwrap().radius, 5.0);
        assert_eq!(chebyshev_interval(3.0, 0.0, 0.5).unwrap().radius, 0.0);
        assert!(close(chebyshev_interval(0.0, 0.25, 0.01).unwrap().radius, 5.0, 1e-12));
        assert!(matches!(chebyshev_interval(0.0, 1.0, 1.0), Err(Error::InvalidDelta(_))));
        assert!(matches!(chebyshev_interval(0.0, 1.0, 0.0), Err(Error::InvalidDelta(_))));

        assert_eq!(chebyshev_tail(1.0, 2.0).unwrap(), 0.25);
        assert_eq!(chebyshev_tail(4.0, 1.0).unwrap(), 1.0);
        assert!(close(chebyshev_tail(0.1, 1.0).unwrap(), 0.1, 1e-15));
        assert!(matches!(chebyshev_tail(1.0, 0.0), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn planner_endpoints() {
        assert_eq!(min_paired_samples(300, 700, 0.0), 300.0);
        assert_eq!(min_paired_samples(300, 700, 1.0), 0.0);
        assert_eq!(min_paired_samples(700, 300, 1.0), 400.0);
        assert_eq!(min_paired_samples(250, 0, 0.8), 250.0);
    }

    #[test]
    fn planner_worked_numbers() {
        let n = min_paired_samples(715, 1669, 0.79 * 0.79);
        assert!((340.0..=360.0).contains(&n), "{n}");
        assert_eq!(min_paired_samples(200, 400, 0.0728 * 0.0728).ceil(), 200.0);
        let n = min_paired_samples(200, 400, 0.6158 * 0.6158);
        assert!((143.0..=147.0).contains(&n), "{n}");
    }

    #[test]
    fn pipeline_without_pool_is_mc() {
        let f = [1.0, 4.0, 2.0, 8.0, 5.0];
        let p = paired(&f, &[0.5, 1.0, 0.0, 3.0, 2.0], 1);
        let cv = run_cv_pipeline(&p, &SurrogateDataset::empty(1, 0), Some(CiSpec::Delta(0.1))).unwrap();
        let mc = mc_estimate(&f).unwrap().with_ci(CiSpec::Delta(0.1)).unwrap();
        assert_eq!(cv.mu_hat, mc.mu_hat);
        assert_eq!(cv.var_hat, mc.var_hat);
        assert_eq!(cv.ci, mc.ci);
        assert_eq!(cv.beta, Some(Beta::zeros(1)));
    }

    #[test]
    fn pipeline_alpha_mode() {
        let p = paired(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], 1);
        let r = run_cv_pipeline(&p, &pool(&[1.0, 2.0, 3.0], 1), Some(CiSpec::Alpha(10.0))).unwrap();
        let ci = r.ci.unwrap();
        assert_eq!(ci.radius, 10.0);
        assert!(close(ci.failure_prob, r.var_hat / 100.0, 1e-15));
    }

    #[test]
    fn quadratic_matches_theory_at_optimum() {
        let m = MomentSummary {
            n: 50,
            mean_f: 0.0,
            var_f: 3.0,
            mean_g: vec![0.0, 0.0],
            var_g: vec![2.0, 0.5, 0.5, 1.0],
            cov_gf: vec![1.2, -0.4],
        };
        let k = 150;
        let b = beta_opt(&m, k).unwrap();
        let rho = rho_squared(&m).unwrap();
        let q = variance_quadratic(&m, &b, m.n, k);
        let theory = cv_variance_theoretical(m.var_f, rho, m.n, k);
        assert!(close(q, theory, 1e-12), "{q} vs {theory}");
    }
}
