//! The posterior of the sABS hypothesis from the two log marginal likelihoods.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::mcmc::McmcDiagnostics;

/// Result of scoring one covariate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub set: Vec<String>,
    /// log P(D_e | D_o*, h_Z)
    pub log_ml_h: f64,
    /// log P(D_e | D_o*, ¬h_Z)
    pub log_ml_not_h: f64,
    /// P(h_Z | D_e, D_o*)
    pub posterior: f64,
    pub prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<McmcDiagnostics>,
}

impl ScoreResult {
    pub fn new(set: Vec<String>, log_ml_h: f64, log_ml_not_h: f64, prior: f64) -> Result<Self> {
        Ok(ScoreResult {
            set,
            log_ml_h,
            log_ml_not_h,
            posterior: posterior(log_ml_h, log_ml_not_h, prior)?,
            prior,
            q: None,
            r: None,
            diagnostics: None,
        })
    }

    /// Posterior log-odds of h_Z; unlike `posterior` it does not saturate.
    pub fn log_odds(&self) -> f64 {
        log_odds(self.log_ml_h, self.log_ml_not_h, self.prior)
    }

    /// The same marginals re-weighed under another prior.
    pub fn with_prior(&self, prior: f64) -> Result<Self> {
        Ok(ScoreResult {
            posterior: posterior(self.log_ml_h, self.log_ml_not_h, prior)?,
            prior,
            ..self.clone()
        })
    }
}

pub fn check_prior(prior: f64) -> Result<()> {
    if prior > 0.0 && prior < 1.0 {
        Ok(())
    } else {
        Err(input(format!(
            "prior {prior} must lie strictly between 0 and 1"
        )))
    }
}

pub fn log_odds(log_ml_h: f64, log_ml_not_h: f64, prior: f64) -> f64 {
    log_ml_h - log_ml_not_h + (prior.ln() - (-prior).ln_1p())
}

/// `P(h) P(D|h) / (P(h) P(D|h) + P(¬h) P(D|¬h))`, evaluated in log space.
pub fn posterior(log_ml_h: f64, log_ml_not_h: f64, prior: f64) -> Result<f64> {
    check_prior(prior)?;
    if log_ml_h == log_ml_not_h {
        return Ok(prior);
    }
    if log_ml_h.is_nan() || log_ml_not_h.is_nan() {
        return Err(input("log marginal likelihood is NaN"));
    }
    let t = log_odds(log_ml_h, log_ml_not_h, prior);
    Ok(if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    })
}

/// `ln Σ exp(v_i)`; `-inf` for an empty slice.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln( (1/n) Σ exp(v_i) )`.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    log_sum_exp(v) - (v.len() as f64).ln()
}
