//! Sampling-based scores for mixed data: a logistic outcome model for Y with
//! Cauchy priors, Metropolis sampling of its posterior on the target
//! observational data, and Monte-Carlo marginal likelihoods of the source
//! experiment.
//!
//! Parameters are ordered intercept, then one coefficient per covariate in
//! the order given, then the treatment coefficient.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, VarType};
use crate::error::{input, Error, Result};
use crate::score::{log_mean_exp, log_sum_exp, ScoreResult};
use crate::sim::rng::{derive_seed, rng, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub intercept_scale: f64,
    pub coef_scale: f64,
    /// Standardize continuous covariates before the priors apply.
    pub standardize: bool,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            intercept_scale: 10.0,
            coef_scale: 2.5,
            standardize: true,
        }
    }
}

impl PriorSpec {
    fn check(&self) -> Result<()> {
        if self.intercept_scale > 0.0
            && self.coef_scale > 0.0
            && self.intercept_scale.is_finite()
            && self.coef_scale.is_finite()
        {
            Ok(())
        } else {
            Err(input("prior scales must be positive and finite"))
        }
    }

    fn scales(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| {
                if i == 0 {
                    self.intercept_scale
                } else {
                    self.coef_scale
                }
            })
            .collect()
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        self.scales(theta.len())
            .iter()
            .zip(theta)
            .map(|(s, t)| -(std::f64::consts::PI * s).ln() - (t / s).powi(2).ln_1p())
            .sum()
    }
}

/// How `(X, Z)` enter the linear predictor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Intercept, one slope per covariate, one for the treatment.
    #[default]
    Linear,
    /// Intercept plus an indicator for every joint configuration of the
    /// (discrete) treatment and covariates but the first.
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    /// Draws kept after burn-in and thinning.
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Initial proposal SDs per parameter; by default taken from the
    /// curvature at the posterior mode.
    pub step_sizes: Option<Vec<f64>>,
    pub seed: u64,
    /// Draws of the prior average start at `n_samples` and double until the
    /// importance ESS reaches `min_prior_ess` or `max_prior_draws` is hit.
    pub min_prior_ess: f64,
    pub max_prior_draws: usize,
    /// Turn a low prior-average ESS into an error instead of a warning.
    pub strict: bool,
    pub encoding: Encoding,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_samples: 2000,
            burn_in: 2000,
            thin: 5,
            step_sizes: None,
            seed: 0,
            min_prior_ess: 50.0,
            max_prior_draws: 1 << 17,
            strict: false,
            encoding: Encoding::Linear,
        }
    }
}

impl McmcConfig {
    pub fn check(&self) -> Result<()> {
        if self.n_samples == 0 || self.thin == 0 {
            return Err(input("n_samples and thin must be at least 1"));
        }
        if let Some(s) = &self.step_sizes {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(input("step sizes must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub acceptance_rate: f64,
    /// Largest split-chain R̂ over parameters.
    pub split_rhat: f64,
    /// Smallest autocorrelation ESS over parameters.
    pub chain_ess: f64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub prior_draws: usize,
    /// Importance ESS of the likelihood weights in the prior average.
    pub prior_ess: f64,
    /// Importance ESS of the likelihood weights in the posterior average.
    pub posterior_ess: f64,
    pub warnings: Vec<String>,
}

impl McmcDiagnostics {
    /// Acceptance rate within [5%, 80%] and split R̂ at most 1.1.
    pub fn chain_converged(&self) -> bool {
        (0.05..=0.8).contains(&self.acceptance_rate) && self.split_rhat <= 1.1
    }
}

/// Affine map of covariates to zero mean and unit SD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    fn identity(k: usize) -> Self {
        Standardizer {
            mean: vec![0.0; k],
            sd: vec![1.0; k],
        }
    }

    fn fit(d: &Dataset, z: &[&str]) -> Result<Self> {
        let mut s = Standardizer::identity(z.len());
        if d.is_empty() {
            return Ok(s);
        }
        for (i, v) in z.iter().enumerate() {
            let c = d.column(v)?;
            let n = c.len() as f64;
            let m = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            s.mean[i] = m;
            // constant columns are only centred
            s.sd[i] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(s)
    }
}

/// Maps rows of a dataset to model features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub x: String,
    pub z: Vec<String>,
    pub encoding: Encoding,
    pub standardizer: Standardizer,
    cards: Vec<u32>,
}

impl Features {
    /// Standardization statistics (linear encoding) come from `fit_on`.
    pub fn new(
        fit_on: &Dataset,
        x: &str,
        z: &[&str],
        encoding: Encoding,
        standardize: bool,
    ) -> Result<Self> {
        fit_on.index_of(x)?;
        for v in z {
            fit_on.index_of(v)?;
            if *v == x {
                return Err(input(format!("`{x}` is both treatment and covariate")));
            }
        }
        let mut cards = Vec::new();
        if encoding == Encoding::Saturated {
            let mut q = 1usize;
            for v in std::iter::once(&x).chain(z) {
                let c = fit_on
                    .var_type(v)?
                    .card()
                    .ok_or_else(|| input(format!("saturated encoding needs discrete `{v}`")))?;
                q = q.saturating_mul(c as usize);
                cards.push(c);
            }
            if q > 4096 {
                return Err(Error::Size {
                    what: "saturated parameter count",
                    got: q,
                    limit: 4096,
                });
            }
        }
        let standardizer = if standardize && encoding == Encoding::Linear {
            let mut s = Standardizer::fit(fit_on, z)?;
            // discrete covariates stay on their own scale
            for (i, v) in z.iter().enumerate() {
                if fit_on.var_type(v)?.is_discrete() {
                    s.mean[i] = 0.0;
                    s.sd[i] = 1.0;
                }
            }
            s
        } else {
            Standardizer::identity(z.len())
        };
        Ok(Features {
            x: x.to_string(),
            z: z.iter().map(|s| s.to_string()).collect(),
            encoding,
            standardizer,
            cards,
        })
    }

    pub fn dim(&self) -> usize {
        match self.encoding {
            Encoding::Linear => self.z.len() + 2,
            Encoding::Saturated => self.cards.iter().map(|&c| c as usize).product(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self.encoding {
            Encoding::Linear => std::iter::once("intercept".to_string())
                .chain(self.z.iter().cloned())
                .chain(std::iter::once(self.x.clone()))
                .collect(),
            Encoding::Saturated => std::iter::once("intercept".to_string())
                .chain((1..self.dim()).map(|j| format!("cell{j}")))
                .collect(),
        }
    }

    fn rows(&self, d: &Dataset) -> Result<Vec<f64>> {
        let dim = self.dim();
        let n = d.n();
        let mut out = vec![0.0; n * dim];
        let xcol = d.column(&self.x)?;
        let zcols = self
            .z
            .iter()
            .map(|v| d.column(v))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..n {
            let row = &mut out[i * dim..(i + 1) * dim];
            row[0] = 1.0;
            match self.encoding {
                Encoding::Linear => {
                    for (k, c) in zcols.iter().enumerate() {
                        row[k + 1] = (c[i] - self.standardizer.mean[k]) / self.standardizer.sd[k];
                    }
                    row[dim - 1] = xcol[i];
                }
                Encoding::Saturated => {
                    let mut j = 0usize;
                    let mut stride = 1usize;
                    for (v, &card) in std::iter::once(xcol)
                        .chain(zcols.iter().copied())
                        .zip(&self.cards)
                    {
                        j += v[i] as usize * stride;
                        stride *= card as usize;
                    }
                    if j > 0 {
                        row[j] = 1.0;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Design matrix and binary outcome of `d`.
    pub fn design(&self, d: &Dataset, y: &str) -> Result<Design> {
        if d.var_type(y)? != VarType::binary() {
            return Err(input(format!("outcome `{y}` must be binary")));
        }
        Ok(Design {
            dim: self.dim(),
            rows: self.rows(d)?,
            y: d.column(y)?.iter().map(|&v| v == 1.0).collect(),
        })
    }

    /// `θ` on the model scale mapped to coefficients of the raw covariates.
    pub fn to_original_scale(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = theta.to_vec();
        if self.encoding == Encoding::Linear {
            let s = &self.standardizer;
            for k in 0..self.z.len() {
                out[k + 1] = theta[k + 1] / s.sd[k];
                out[0] -= theta[k + 1] * s.mean[k] / s.sd[k];
            }
        }
        out
    }
}

/// Dense row-major design matrix with a binary response.
#[derive(Debug, Clone)]
pub struct Design {
    dim: usize,
    rows: Vec<f64>,
    y: Vec<bool>,
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Design {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn eta(&self, i: usize, theta: &[f64]) -> f64 {
        self.rows[i * self.dim..(i + 1) * self.dim]
            .iter()
            .zip(theta)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `Σ_i y_i log π_i + (1 - y_i) log(1 - π_i)` with `π = σ(η)`.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (0..self.n())
            .map(|i| {
                let eta = self.eta(i, theta);
                if self.y[i] {
                    -softplus(-eta)
                } else {
                    -softplus(eta)
                }
            })
            .sum()
    }

    /// Gradient and Fisher information `XᵀWX` of the log-likelihood.
    fn gradient_information(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let mut g = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        for i in 0..self.n() {
            let row = &self.rows[i * d..(i + 1) * d];
            let p = sigmoid(self.eta(i, theta));
            let r = if self.y[i] { 1.0 } else { 0.0 } - p;
            let w = p * (1.0 - p);
            for a in 0..d {
                g[a] += r * row[a];
                for b in 0..=a {
                    h[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        (g, h)
    }

    fn predict(&self, theta: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = sigmoid(self.eta(i, theta));
        }
    }
}

pub fn sample_prior(
    prior: &PriorSpec,
    dim: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<LogisticParams>> {
    prior.check()?;
    if dim == 0 {
        return Err(input("parameter dimension must be at least 1"));
    }
    let mut r = rng(seed);
    Ok(draw_prior(prior, dim, n, &mut r))
}

fn draw_prior(prior: &PriorSpec, dim: usize, n: usize, r: &mut ChaCha8Rng) -> Vec<LogisticParams> {
    let dists: Vec<Cauchy<f64>> = prior
        .scales(dim)
        .into_iter()
        .map(|s| Cauchy::new(0.0, s).expect("validated scale"))
        .collect();
    (0..n)
        .map(|_| LogisticParams {
            theta: dists.iter().map(|c| c.sample(r)).collect(),
        })
        .collect()
}

fn log_posterior(design: &Design, prior: &PriorSpec, theta: &[f64]) -> f64 {
    design.log_likelihood(theta) + prior.log_density(theta)
}

/// Posterior mode and the curvature there, by damped Newton steps. The
/// Cauchy prior enters through its Fisher-like curvature `2 / (s² + θ²)`,
/// which keeps every step an ascent direction.
fn posterior_mode(design: &Design, prior: &PriorSpec) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = design.dim;
    let scales = prior.scales(d);
    let mut theta = vec![0.0; d];
    let mut lp = log_posterior(design, prior, &theta);
    for _ in 0..200 {
        let (mut g, mut h) = design.gradient_information(&theta);
        for a in 0..d {
            let s2 = scales[a] * scales[a];
            g[a] -= 2.0 * theta[a] / (s2 + theta[a] * theta[a]);
            h[(a, a)] += 2.0 / (s2 + theta[a] * theta[a]);
        }
        let step = h
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Fit("curvature at the mode is not positive definite".into()))?
            .solve(&g);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-10 {
            let cand: Vec<f64> = theta
                .iter()
                .zip(step.iter())
                .map(|(a, b)| a + t * b)
                .collect();
            let lc = log_posterior(design, prior, &cand);
            if lc >= lp {
                moved = lc > lp;
                theta = cand;
                lp = lc;
                break;
            }
            t *= 0.5;
        }
        if !moved || g.norm() < 1e-8 {
            break;
        }
    }
    let (_, mut h) = design.gradient_information(&theta);
    for a in 0..d {
        h[(a, a)] += 2.0 / (scales[a] * scales[a] + theta[a] * theta[a]);
    }
    Ok((theta, h))
}

/// Lower Cholesky factor of `c`, jittering the diagonal if needed.
fn chol_factor(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut m = c.clone();
        for a in 0..m.nrows() {
            m[(a, a)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            return Some(ch.l());
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 100.0 };
    }
    None
}

/// Autocorrelation ESS with Geyer's initial positive sequence.
pub fn autocorrelation_ess(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    let c0 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return n as f64;
    }
    let rho =
        |t: usize| (0..n - t).map(|i| (x[i] - m) * (x[i + t] - m)).sum::<f64>() / (n as f64 * c0);
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 { 1.0 } else { rho(2 * k) } + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    n as f64 / tau.max(1.0 / n as f64)
}

/// R̂ computed from the two halves of one chain.
pub fn split_rhat(x: &[f64]) -> f64 {
    let h = x.len() / 2;
    if h < 2 {
        return f64::NAN;
    }
    let halves = [&x[..h], &x[x.len() - h..]];
    let stats: Vec<(f64, f64)> = halves
        .iter()
        .map(|c| {
            let m = c.iter().sum::<f64>() / h as f64;
            let v = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (h - 1) as f64;
            (m, v)
        })
        .collect();
    let w = (stats[0].1 + stats[1].1) / 2.0;
    let grand = (stats[0].0 + stats[1].0) / 2.0;
    let b = h as f64 * stats.iter().map(|(m, _)| (m - grand).powi(2)).sum::<f64>();
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (h as f64 - 1.0) / h as f64 * w + b / h as f64;
    (var_plus / w).sqrt()
}

/// Importance ESS `(Σ w)² / Σ w²` of weights given as logs.
pub fn importance_ess(log_w: &[f64]) -> f64 {
    if log_w.is_empty() {
        return 0.0;
    }
    let doubled: Vec<f64> = log_w.iter().map(|l| 2.0 * l).collect();
    (2.0 * log_sum_exp(log_w) - log_sum_exp(&doubled)).exp()
}

/// Draws from a fitted posterior, on the model (standardized) scale.
#[derive(Debug, Clone)]
pub struct PosteriorSample {
    pub features: Features,
    pub draws: Vec<LogisticParams>,
    pub diagnostics: McmcDiagnostics,
}

impl PosteriorSample {
    pub fn original_scale(&self) -> Vec<LogisticParams> {
        self.draws
            .iter()
            .map(|p| LogisticParams {
                theta: self.features.to_original_scale(&p.theta),
            })
            .collect()
    }

    /// Posterior predictive `P(Y = 1 | row)` for every row of `d`.
    pub fn predict(&self, d: &Dataset) -> Result<Vec<f64>> {
        let rows = self.features.rows(d)?;
        let design = Design {
            dim: self.features.dim(),
            rows,
            y: vec![false; d.n()],
        };
        let mut acc = vec![0.0; d.n()];
        let mut buf = vec![0.0; d.n()];
        for p in &self.draws {
            design.predict(&p.theta, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        let k = self.draws.len() as f64;
        Ok(acc.into_iter().map(|a| a / k).collect())
    }

    /// Writes one row per draw, original scale, with a header of parameter names.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", self.features.param_names().join(","))?;
        for p in self.original_scale() {
            let cells: Vec<String> = p.theta.iter().map(f64::to_string).collect();
            writeln!(f, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn run_chain(
    design: &Design,
    prior: &PriorSpec,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<(Vec<LogisticParams>, McmcDiagnostics)> {
    let d = design.dim;
    let (mode, info) = posterior_mode(design, prior)?;
    let cov = match &cfg.step_sizes {
        Some(s) => {
            if s.len() != d {
                return Err(input(format!("expected {d} step sizes, got {}", s.len())));
            }
            DMatrix::from_diagonal(&DVector::from_iterator(d, s.iter().map(|v| v * v)))
        }
        None => info
            .try_inverse()
            .ok_or_else(|| Error::Fit("singular curvature at the mode".into()))?,
    };
    let mut chol = chol_factor(&cov).ok_or_else(|| Error::Fit("proposal covariance".into()))?;
    let mut log_scale = (2.38f64 * 2.38 / d as f64).ln();

    let mut r = rng(seed);
    let mut theta = mode;
    let mut lp = log_posterior(design, prior, &theta);
    let mut eps = vec![0.0; d];
    let mut step = |theta: &mut Vec<f64>,
                    lp: &mut f64,
                    chol: &DMatrix<f64>,
                    log_scale: f64,
                    r: &mut ChaCha8Rng| {
        for e in eps.iter_mut() {
            *e = r.sample(StandardNormal);
        }
        let s = (0.5 * log_scale).exp();
        let cand: Vec<f64> = (0..d)
            .map(|a| theta[a] + s * (0..=a).map(|b| chol[(a, b)] * eps[b]).sum::<f64>())
            .collect();
        let lc = log_posterior(design, prior, &cand);
        let log_ratio = lc - *lp;
        let u: f64 = r.random();
        let accept_prob = if log_ratio >= 0.0 {
            1.0
        } else {
            log_ratio.exp()
        };
        if u < accept_prob {
            *theta = cand;
            *lp = lc;
            (true, accept_prob)
        } else {
            (false, accept_prob)
        }
    };

    // burn-in: adapt scale toward 0.234 acceptance and the covariance toward
    // the empirical one of the draws so far
    let mut mean = DVector::<f64>::zeros(d);
    let mut m2 = DMatrix::<f64>::zeros(d, d);
    for t in 0..cfg.burn_in {
        let (_, a) = step(&mut theta, &mut lp, &chol, log_scale, &mut r);
        log_scale += (a - 0.234) / ((t + 1) as f64).powf(0.6);
        let v = DVector::from_column_slice(&theta);
        let delta = &v - &mean;
        mean += &delta / (t + 1) as f64;
        m2 += &delta * (&v - &mean).transpose();
        if t >= 200 && (t + 1) % 100 == 0 {
            let emp = &m2 / t as f64;
            if let Some(l) = chol_factor(&emp) {
                chol = l;
            }
        }
    }

    let mut draws = Vec::with_capacity(cfg.n_samples);
    let mut accepted = 0usize;
    let total = cfg.n_samples * cfg.thin;
    for t in 0..total {
        if step(&mut theta, &mut lp, &chol, log_scale, &mut r).0 {
            accepted += 1;
        }
        if (t + 1) % cfg.thin == 0 {
            draws.push(LogisticParams {
                theta: theta.clone(),
            });
        }
    }

    let mut diag = McmcDiagnostics {
        acceptance_rate: accepted as f64 / total as f64,
        n_samples: cfg.n_samples,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        split_rhat: 1.0,
        chain_ess: f64::INFINITY,
        ..Default::default()
    };
    for a in 0..d {
        let trace: Vec<f64> = draws.iter().map(|p| p.theta[a]).collect();
        let rh = split_rhat(&trace);
        if rh.is_nan() || rh > diag.split_rhat {
            diag.split_rhat = rh;
        }
        diag.chain_ess = diag.chain_ess.min(autocorrelation_ess(&trace));
    }
    if !(0.05..=0.8).contains(&diag.acceptance_rate) {
        diag.warnings.push(format!(
            "acceptance rate {:.3} outside [0.05, 0.8]",
            diag.acceptance_rate
        ));
    }
    if !(diag.split_rhat <= 1.1) {
        diag.warnings
            .push(format!("split R-hat {:.3} exceeds 1.1", diag.split_rhat));
    }
    Ok((draws, diag))
}

fn check_roles(d: &Dataset, y: &str, x: &str, z: &[&str]) -> Result<()> {
    if d.var_type(y)? != VarType::binary() {
        return Err(input(format!("outcome `{y}` must be binary")));
    }
    d.index_of(x)?;
    for v in z {
        d.index_of(v)?;
        if *v == y {
            return Err(input(format!("`{y}` is both outcome and covariate")));
        }
    }
    Ok(())
}

/// Samples the posterior of the logistic model for `y` given `(z, x)` on `d`.
/// Standardization statistics come from `d`.
pub fn sample_posterior(
    d: &Dataset,
    y: &str,
    x: &str,
    z: &[&str],
    prior: &PriorSpec,
    cfg: &McmcConfig,
) -> Result<PosteriorSample> {
    prior.check()?;
    cfg.check()?;
    check_roles(d, y, x, z)?;
    let features = Features::new(d, x, z, cfg.encoding, prior.standardize)?;
    posterior_with(d, y, features, prior, cfg, cfg.seed)
}

fn posterior_with(
    d: &Dataset,
    y: &str,
    features: Features,
    prior: &PriorSpec,
    cfg: &McmcConfig,
    seed: u64,
) -> Result<PosteriorSample> {
    let design = features.design(d, y)?;
    let (draws, diagnostics) = run_chain(&design, prior, cfg, seed)?;
    Ok(PosteriorSample {
        features,
        draws,
        diagnostics,
    })
}

/// Log-likelihood of `y` in `d` under original-scale parameters
/// (intercept, one per `z`, then `x`).
pub fn likelihood(
    d: &Dataset,
    params: &LogisticParams,
    y: &str,
    x: &str,
    z: &[&str],
) -> Result<f64> {
    check_roles(d, y, x, z)?;
    let features = Features::new(d, x, z, Encoding::Linear, false)?;
    if params.theta.len() != features.dim() {
        return Err(input(format!(
            "expected {} parameters, got {}",
            features.dim(),
            params.theta.len()
        )));
    }
    Ok(features.design(d, y)?.log_likelihood(&params.theta))
}

/// Posterior of the outcome model on the observational data, as used by
/// [`probs_abs`]; it does not depend on the experiment, so callers scoring
/// several experiments against one observational sample can reuse it.
pub fn fit_observational(
    do_: &Dataset,
    y: &str,
    x: &str,
    z: &[&str],
    prior: &PriorSpec,
    cfg: &McmcConfig,
) -> Result<PosteriorSample> {
    prior.check()?;
    cfg.check()?;
    check_roles(do_, y, x, z)?;
    if do_.is_empty() {
        return Err(input("observational dataset is empty"));
    }
    let features = Features::new(do_, x, z, cfg.encoding, prior.standardize)?;
    posterior_with(
        do_,
        y,
        features,
        prior,
        cfg,
        derive_seed(cfg.seed, &[tag("posterior")]),
    )
}

/// Monte-Carlo estimates of `log P(D_e | D_o*, h_Z)` (average over posterior
/// draws given D_o*) and `log P(D_e | D_o*, ¬h_Z)` (average over prior
/// draws), combined into the posterior of h_Z.
#[allow(clippy::too_many_arguments)]
pub fn probs_abs(
    de: &Dataset,
    do_: &Dataset,
    y: &str,
    x: &str,
    z: &[&str],
    prior: &PriorSpec,
    cfg: &McmcConfig,
    hz_prior: f64,
) -> Result<ScoreResult> {
    crate::score::check_prior(hz_prior)?;
    de.check_same_schema(do_)?;
    check_roles(do_, y, x, z)?;
    if de.is_empty() {
        let set = z.iter().map(|s| s.to_string()).collect();
        return ScoreResult::new(set, 0.0, 0.0, hz_prior);
    }
    let post = fit_observational(do_, y, x, z, prior, cfg)?;
    score_experiment(&post, de, y, prior, cfg, hz_prior)
}

/// The experiment-dependent half of [`probs_abs`].
pub fn score_experiment(
    post: &PosteriorSample,
    de: &Dataset,
    y: &str,
    prior: &PriorSpec,
    cfg: &McmcConfig,
    hz_prior: f64,
) -> Result<ScoreResult> {
    prior.check()?;
    cfg.check()?;
    crate::score::check_prior(hz_prior)?;
    let set: Vec<String> = post.features.z.clone();
    if de.is_empty() {
        return ScoreResult::new(set, 0.0, 0.0, hz_prior);
    }
    let exp_design = post.features.design(de, y)?;
    let dim = post.features.dim();

    let l1: Vec<f64> = post
        .draws
        .iter()
        .map(|p| exp_design.log_likelihood(&p.theta))
        .collect();
    let log_ml_h = log_mean_exp(&l1);

    let mut r = rng(derive_seed(cfg.seed, &[tag("prior")]));
    let mut l0: Vec<f64> = Vec::new();
    let mut target = cfg.n_samples.min(cfg.max_prior_draws.max(1));
    let mut prior_ess;
    loop {
        let extra = draw_prior(prior, dim, target - l0.len(), &mut r);
        l0.extend(extra.iter().map(|p| exp_design.log_likelihood(&p.theta)));
        prior_ess = importance_ess(&l0);
        if prior_ess >= cfg.min_prior_ess || target >= cfg.max_prior_draws {
            break;
        }
        target = (target * 2).min(cfg.max_prior_draws);
    }
    let log_ml_not_h = log_mean_exp(&l0);

    let mut diag = post.diagnostics.clone();
    diag.prior_draws = l0.len();
    diag.prior_ess = prior_ess;
    diag.posterior_ess = importance_ess(&l1);
    if prior_ess < cfg.min_prior_ess {
        let msg = format!(
            "prior-average ESS {prior_ess:.1} below {} after {} draws",
            cfg.min_prior_ess,
            l0.len()
        );
        if cfg.strict {
            return Err(Error::Convergence(msg));
        }
        diag.warnings.push(msg);
    }
    let mut s = ScoreResult::new(set, log_ml_h, log_ml_not_h, hz_prior)?;
    s.diagnostics = Some(diag);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Domain, Regime};

    fn toy(y: Vec<f64>, x: Vec<f64>, z: Vec<f64>) -> Dataset {
        Dataset::new(
            vec!["Z".into(), "X".into(), "Y".into()],
            vec![VarType::Continuous, VarType::binary(), VarType::binary()],
            vec![z, x, y],
            Domain::Target,
            Regime::Observational,
        )
        .unwrap()
    }

    #[test]
    fn zero_parameters_give_half_per_row() {
        let d = toy(
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![0.3, -2.0, 5.0],
        );
        let l = likelihood(
            &d,
            &LogisticParams {
                theta: vec![0.0; 3],
            },
            "Y",
            "X",
            &["Z"],
        )
        .unwrap();
        assert!((l - 3.0 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_likelihood_is_near_zero() {
        let d = toy(vec![1.0], vec![1.0], vec![0.0]);
        let l = likelihood(
            &d,
            &LogisticParams {
                theta: vec![800.0, 0.0, 0.0],
            },
            "Y",
            "X",
            &["Z"],
        )
        .unwrap();
        assert!(l <= 0.0 && l > -1e-300);
        let d = toy(vec![0.0], vec![1.0], vec![0.0]);
        let l = likelihood(
            &d,
            &LogisticParams {
                theta: vec![800.0, 0.0, 0.0],
            },
            "Y",
            "X",
            &["Z"],
        )
        .unwrap();
        assert!((l + 800.0).abs() < 1e-9);
    }

    #[test]
    fn prior_draws_are_reproducible_and_centered() {
        let p = PriorSpec::default();
        let a = sample_prior(&p, 3, 50, 4).unwrap();
        assert_eq!(a, sample_prior(&p, 3, 50, 4).unwrap());
        assert_ne!(a, sample_prior(&p, 3, 50, 5).unwrap());
        assert!(sample_prior(&p, 0, 5, 1).is_err());
    }

    #[test]
    fn empty_experiment_returns_the_prior() {
        let d = toy(
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.3, -2.0, 5.0, 1.0],
        );
        let e = d.take_rows(&[]).unwrap();
        let s = probs_abs(
            &e,
            &d,
            "Y",
            "X",
            &["Z"],
            &PriorSpec::default(),
            &McmcConfig::default(),
            0.3,
        )
        .unwrap();
        assert_eq!((s.log_ml_h, s.log_ml_not_h, s.posterior), (0.0, 0.0, 0.3));
    }

    #[test]
    fn non_binary_outcome_is_rejected() {
        let d = Dataset::new(
            vec!["X".into(), "Y".into()],
            vec![VarType::binary(), VarType::Continuous],
            vec![vec![0.0, 1.0], vec![0.5, 0.2]],
            Domain::Target,
            Regime::Observational,
        )
        .unwrap();
        let r = sample_posterior(
            &d,
            "Y",
            "X",
            &[],
            &PriorSpec::default(),
            &McmcConfig::default(),
        );
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn original_scale_undoes_standardization() {
        let d = toy(
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![1.0, 3.0, 5.0, 7.0],
        );
        let f = Features::new(&d, "X", &["Z"], Encoding::Linear, true).unwrap();
        let theta = [0.4, -1.2, 0.7];
        let orig = f.to_original_scale(&theta);
        let design = f.design(&d, "Y").unwrap();
        let raw = Features::new(&d, "X", &["Z"], Encoding::Linear, false)
            .unwrap()
            .design(&d, "Y")
            .unwrap();
        assert!((design.log_likelihood(&theta) - raw.log_likelihood(&orig)).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_on_simple_series() {
        let iid: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        assert!(autocorrelation_ess(&iid) > 300.0);
        let sticky: Vec<f64> = (0..1000).map(|i| (i / 100) as f64).collect();
        assert!(autocorrelation_ess(&sticky) < 50.0);
        assert!(split_rhat(&sticky) > 1.1);
        assert!((importance_ess(&[0.0; 10]) - 10.0).abs() < 1e-9);
        assert!((importance_ess(&[0.0, -1e4]) - 1.0).abs() < 1e-9);
    }
}
