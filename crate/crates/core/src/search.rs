//! Greedy add/remove search for the covariate set with the highest
//! `P(D_e | D_o*, h_Z)`, and the exhaustive ranking it replaces.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::discrete::{posterior_sabs, Binning, ContingencyCounts};
use crate::error::{input, Error, Result};
use crate::graph::canonical_subsets;
use crate::mcmc::{fit_observational, score_experiment, McmcConfig, PosteriorSample, PriorSpec};
use crate::score::{check_prior, ScoreResult};

/// Largest candidate set [`exhaustive_sabs`] accepts.
pub const MAX_EXHAUSTIVE: usize = 12;

/// Scores one covariate set against fixed data.
pub trait SetScorer: Sync {
    fn score(&self, z: &[&str]) -> Result<ScoreResult>;
}

/// Closed-form Dirichlet-multinomial scorer. Continuous variables are
/// binned at quantiles of the observational data.
pub struct DiscreteScorer<'a> {
    de: &'a Dataset,
    do_: &'a Dataset,
    y: String,
    x: String,
    bins: Option<Binning>,
    prior: f64,
}

impl<'a> DiscreteScorer<'a> {
    pub fn new(
        de: &'a Dataset,
        do_: &'a Dataset,
        y: &str,
        x: &str,
        n_bins: Option<usize>,
        prior: f64,
    ) -> Result<Self> {
        check_prior(prior)?;
        de.check_same_schema(do_)?;
        let bins = match n_bins {
            Some(k) => {
                let names: Vec<&str> = do_.names().iter().map(String::as_str).collect();
                Some(Binning::quantiles(do_, &names, k)?)
            }
            None => None,
        };
        Ok(DiscreteScorer {
            de,
            do_,
            y: y.to_string(),
            x: x.to_string(),
            bins,
            prior,
        })
    }
}

impl SetScorer for DiscreteScorer<'_> {
    fn score(&self, z: &[&str]) -> Result<ScoreResult> {
        let c = ContingencyCounts::from_data(
            self.de,
            self.do_,
            &self.y,
            &self.x,
            z,
            self.bins.as_ref(),
        )?;
        let mut s = posterior_sabs(&c, self.prior)?;
        s.set = z.iter().map(|v| v.to_string()).collect();
        Ok(s)
    }
}

/// Observational posteriors keyed by covariate set, shareable between
/// scorers that use the same observational data and configuration.
#[derive(Default)]
pub struct PosteriorCache {
    fits: Mutex<HashMap<Vec<String>, Arc<PosteriorSample>>>,
}

impl PosteriorCache {
    fn get_or_fit(
        &self,
        key: Vec<String>,
        fit: impl FnOnce() -> Result<PosteriorSample>,
    ) -> Result<Arc<PosteriorSample>> {
        if let Some(p) = self.fits.lock().unwrap().get(&key) {
            return Ok(Arc::clone(p));
        }
        let p = Arc::new(fit()?);
        self.fits.lock().unwrap().insert(key, Arc::clone(&p));
        Ok(p)
    }
}

/// Sampling-based scorer. Every set is scored with the same seed, so
/// comparisons between sets share their Monte-Carlo randomness.
pub struct McmcScorer<'a> {
    de: &'a Dataset,
    do_: &'a Dataset,
    y: String,
    x: String,
    prior: PriorSpec,
    cfg: McmcConfig,
    hz_prior: f64,
    cache: &'a PosteriorCache,
}

impl<'a> McmcScorer<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        de: &'a Dataset,
        do_: &'a Dataset,
        y: &str,
        x: &str,
        prior: PriorSpec,
        cfg: McmcConfig,
        hz_prior: f64,
        cache: &'a PosteriorCache,
    ) -> Result<Self> {
        check_prior(hz_prior)?;
        cfg.check()?;
        de.check_same_schema(do_)?;
        Ok(McmcScorer {
            de,
            do_,
            y: y.to_string(),
            x: x.to_string(),
            prior,
            cfg,
            hz_prior,
            cache,
        })
    }
}

impl SetScorer for McmcScorer<'_> {
    fn score(&self, z: &[&str]) -> Result<ScoreResult> {
        if self.de.is_empty() {
            let set = z.iter().map(|v| v.to_string()).collect();
            return ScoreResult::new(set, 0.0, 0.0, self.hz_prior);
        }
        let key = z.iter().map(|v| v.to_string()).collect();
        let post = self.cache.get_or_fit(key, || {
            fit_observational(self.do_, &self.y, &self.x, z, &self.prior, &self.cfg)
        })?;
        score_experiment(
            &post,
            self.de,
            &self.y,
            &self.prior,
            &self.cfg,
            self.hz_prior,
        )
    }
}

/// Memoizes another scorer by set.
pub struct CachedScorer<'s> {
    inner: &'s dyn SetScorer,
    memo: Mutex<HashMap<Vec<String>, ScoreResult>>,
}

impl<'s> CachedScorer<'s> {
    pub fn new(inner: &'s dyn SetScorer) -> Self {
        CachedScorer {
            inner,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.memo.lock().unwrap().len()
    }
}

impl SetScorer for CachedScorer<'_> {
    fn score(&self, z: &[&str]) -> Result<ScoreResult> {
        let key: Vec<String> = z.iter().map(|v| v.to_string()).collect();
        if let Some(s) = self.memo.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let s = self.inner.score(z)?;
        self.memo.lock().unwrap().insert(key, s.clone());
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// `P(h_Z*) > t`: pool both datasets conditioning on Z*.
    Estimate,
    /// No set passed the threshold.
    #[serde(rename = "NaN")]
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub set: Vec<String>,
    pub log_ml_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub z_star: Vec<String>,
    pub posterior: f64,
    pub threshold: f64,
    pub decision: Decision,
    /// Accepted sets in order, starting from the empty set.
    pub trace: Vec<TraceStep>,
    pub steps: usize,
    pub score: ScoreResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub threshold: f64,
    /// Upper bound on accepted moves.
    pub max_steps: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            threshold: 0.5,
            max_steps: 1000,
        }
    }
}

fn check_candidates(candidates: &[&str]) -> Result<()> {
    for (i, c) in candidates.iter().enumerate() {
        if candidates[..i].contains(c) {
            return Err(input(format!("candidate `{c}` listed twice")));
        }
    }
    Ok(())
}

/// Greedy search from the empty set. Each round scores every single
/// removal and addition and moves to the best one if it strictly improves
/// `log P(D_e | D_o*, h_Z)`; ties go to removals, then to the candidate
/// listed first.
pub fn find_sabs(
    scorer: &dyn SetScorer,
    candidates: &[&str],
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    check_candidates(candidates)?;
    if !(0.0..=1.0).contains(&opts.threshold) {
        return Err(input("threshold must lie in [0, 1]"));
    }
    let scorer = CachedScorer::new(scorer);
    let as_set = |mask: &[bool]| -> Vec<&str> {
        candidates
            .iter()
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|(c, _)| *c)
            .collect()
    };
    let mut mask = vec![false; candidates.len()];
    let mut current = scorer.score(&[])?;
    let mut trace = vec![TraceStep {
        set: Vec::new(),
        log_ml_h: current.log_ml_h,
    }];
    let mut steps = 0;
    while steps < opts.max_steps {
        let removals = (0..candidates.len()).filter(|&i| mask[i]);
        let additions = (0..candidates.len()).filter(|&i| !mask[i]);
        let mut best: Option<(Vec<bool>, ScoreResult)> = None;
        for i in removals.chain(additions) {
            let mut m = mask.clone();
            m[i] = !m[i];
            let s = scorer.score(&as_set(&m))?;
            if best.as_ref().is_none_or(|(_, b)| s.log_ml_h > b.log_ml_h) {
                best = Some((m, s));
            }
        }
        match best {
            Some((m, s)) if s.log_ml_h > current.log_ml_h => {
                mask = m;
                current = s;
                trace.push(TraceStep {
                    set: current.set.clone(),
                    log_ml_h: current.log_ml_h,
                });
                steps += 1;
            }
            _ => break,
        }
    }
    let decision = if current.posterior > opts.threshold {
        Decision::Estimate
    } else {
        Decision::NotFound
    };
    Ok(SearchOutcome {
        z_star: current.set.clone(),
        posterior: current.posterior,
        threshold: opts.threshold,
        decision,
        trace,
        steps,
        score: current,
    })
}

/// Every subset of `candidates`, scored and ranked by posterior (then by
/// log-odds, then canonical subset order).
pub fn exhaustive_sabs(scorer: &dyn SetScorer, candidates: &[&str]) -> Result<Vec<ScoreResult>> {
    check_candidates(candidates)?;
    if candidates.len() > MAX_EXHAUSTIVE {
        return Err(Error::Size {
            what: "exhaustive candidate set",
            got: candidates.len(),
            limit: MAX_EXHAUSTIVE,
        });
    }
    let mut scored = canonical_subsets(candidates)
        .into_iter()
        .map(|z| scorer.score(&z))
        .collect::<Result<Vec<_>>>()?;
    // stable sort keeps canonical order among exact ties
    scored.sort_by(|a, b| {
        b.posterior
            .total_cmp(&a.posterior)
            .then(b.log_odds().total_cmp(&a.log_odds()))
    });
    Ok(scored)
}
