//! Simulation batches: score every covariate subset, run the greedy search,
//! and compare the resulting estimator against baselines on held-out target
//! experimental data.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auc_sabs, cross_entropy, fit_estimator, FitOptions, Model, Source};
use crate::data::{Dataset, Domain};
use crate::discrete::Binning;
use crate::error::{input, Result};
use crate::graph::{canonical_subsets, is_sabs};
use crate::mcmc::{McmcConfig, PriorSpec};
use crate::score::ScoreResult;
use crate::search::{
    exhaustive_sabs, find_sabs, CachedScorer, Decision, DiscreteScorer, McmcScorer, PosteriorCache,
    SearchOptions, SetScorer,
};
use crate::sim::rng::{derive_seed, tag};
use crate::sim::{sample, RegimeKind, Scenario, ScmSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerChoice {
    /// Closed-form score; continuous covariates are cut into `bins` quantile bins.
    Discrete {
        bins: Option<usize>,
    },
    Mcmc,
}

impl ScorerChoice {
    fn model(self) -> Model {
        match self {
            ScorerChoice::Discrete { .. } => Model::DirichletMultinomial,
            ScorerChoice::Mcmc => Model::BayesianLogistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n_sims: usize,
    pub n_o: usize,
    pub n_e: Vec<usize>,
    pub n_test: usize,
    pub scorer: ScorerChoice,
    pub threshold: f64,
    pub hz_prior: f64,
    pub seed: u64,
    pub prior: PriorSpec,
    pub mcmc: McmcConfig,
    /// Worker threads; 1 runs sequentially.
    pub jobs: usize,
}

impl ExperimentConfig {
    /// 100 simulations, 5000 observational and {50, 100, 300} experimental
    /// samples, 1000 test samples; sampling scorer for mixed data.
    pub fn paper(scenario: Scenario) -> Self {
        ExperimentConfig {
            scenario,
            n_sims: 100,
            n_o: 5000,
            n_e: vec![50, 100, 300],
            n_test: 1000,
            scorer: if scenario.is_discrete() {
                ScorerChoice::Discrete { bins: None }
            } else {
                ScorerChoice::Mcmc
            },
            threshold: 0.5,
            hz_prior: 0.5,
            seed: 0,
            prior: PriorSpec::default(),
            mcmc: McmcConfig::default(),
            jobs: 1,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(input("need at least one simulation"));
        }
        if self.n_o == 0 || self.n_test == 0 {
            return Err(input("observational and test sizes must be positive"));
        }
        if self.n_e.is_empty() {
            return Err(input("need at least one experimental sample size"));
        }
        if self.jobs == 0 {
            return Err(input("jobs must be at least 1"));
        }
        self.mcmc.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub scenario: Scenario,
    pub n_e: usize,
    pub sim: usize,
    pub subset: String,
    pub posterior: f64,
    /// 1 if the subset is an s-admissible backdoor set in the true diagram.
    pub label: u8,
    pub log_odds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeRow {
    pub scenario: Scenario,
    pub n_e: usize,
    pub sim: usize,
    pub method: String,
    /// NaN when the search returned no set.
    pub cross_entropy: f64,
    /// Conditioning set of the estimator.
    pub z_star: String,
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRow {
    pub scenario: Scenario,
    pub n_e: usize,
    pub sim: usize,
    pub z_star: String,
    pub posterior: f64,
    pub decision: String,
    pub steps: usize,
    pub warnings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub sim: usize,
    pub n_e: Option<usize>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub auc: Vec<AucRow>,
    pub ce: Vec<CeRow>,
    pub search: Vec<SearchRow>,
    pub failures: Vec<Failure>,
}

pub const FINDSABS: &str = "FindsABS";

/// `{A,B}`; `{}` for the empty set.
pub fn set_label<S: AsRef<str>>(set: &[S]) -> String {
    let names: Vec<&str> = set.iter().map(AsRef::as_ref).collect();
    format!("{{{}}}", names.join(","))
}

impl ExperimentReport {
    /// AUC per experimental sample size, ranking by posterior log-odds so
    /// that saturated posteriors still order correctly.
    pub fn auc_by_n_e(&self) -> Vec<(usize, Result<f64>)> {
        self.config
            .n_e
            .iter()
            .map(|&ne| {
                let batch: Vec<(f64, bool)> = self
                    .auc
                    .iter()
                    .filter(|r| r.n_e == ne)
                    .map(|r| (r.log_odds, r.label == 1))
                    .collect();
                (ne, auc_sabs(&batch))
            })
            .collect()
    }

    /// Cross-entropies of `method` at `n_e`, indexed by simulation (NaN where
    /// missing), so that two methods pair up element by element.
    pub fn ce_by_sim(&self, method: &str, n_e: usize) -> Vec<f64> {
        let mut out = vec![f64::NAN; self.config.n_sims];
        for r in &self.ce {
            if r.method == method && r.n_e == n_e {
                out[r.sim] = r.cross_entropy;
            }
        }
        out
    }

    fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        if rows.is_empty() {
            w.write_record(header)?;
        }
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `auc.csv`, `ce.csv`, `search.csv` and `failures.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let auc: Vec<_> = self
            .auc
            .iter()
            .map(|r| {
                (
                    r.scenario.as_str(),
                    r.n_e,
                    r.sim,
                    &r.subset,
                    r.posterior,
                    r.label,
                    r.log_odds,
                )
            })
            .collect();
        let auc_header = [
            "scenario",
            "n_e",
            "sim",
            "subset",
            "posterior",
            "label",
            "log_odds",
        ];
        let mut w = csv::Writer::from_path(dir.join("auc.csv"))?;
        w.write_record(auc_header)?;
        for r in auc {
            w.serialize(r)?;
        }
        w.flush()?;
        let ce_header = [
            "scenario",
            "n_e",
            "sim",
            "method",
            "cross_entropy",
            "z_star",
            "decision",
        ];
        let mut w = csv::Writer::from_path(dir.join("ce.csv"))?;
        w.write_record(ce_header)?;
        for r in &self.ce {
            w.serialize((
                r.scenario.as_str(),
                r.n_e,
                r.sim,
                &r.method,
                r.cross_entropy,
                &r.z_star,
                &r.decision,
            ))?;
        }
        w.flush()?;
        Self::write_rows(
            &dir.join("search.csv"),
            &self.search,
            &[
                "scenario",
                "n_e",
                "sim",
                "z_star",
                "posterior",
                "decision",
                "steps",
                "warnings",
            ],
        )?;
        Self::write_rows(
            &dir.join("failures.csv"),
            &self.failures,
            &["sim", "n_e", "error"],
        )?;
        Ok(())
    }
}

/// Like [`sample`], but `n = 0` yields an empty table with the same schema.
fn draw(
    spec: &ScmSpec,
    domain: Domain,
    regime: RegimeKind,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return sample(spec, domain, regime, 1, seed)?.take_rows(&[]);
    }
    sample(spec, domain, regime, n, seed)
}

fn decision_str(d: Decision) -> &'static str {
    match d {
        Decision::Estimate => "estimate",
        Decision::NotFound => "NaN",
    }
}

struct SimData {
    spec: ScmSpec,
    do_: Dataset,
    covariates: Vec<String>,
}

fn sim_seed(base: u64, sim: usize) -> u64 {
    derive_seed(base, &[sim as u64])
}

fn prepare(scenario: Scenario, seed: u64, n_o: usize) -> Result<SimData> {
    let spec = scenario.build(derive_seed(seed, &[tag("spec")]))?;
    let do_ = draw(
        &spec,
        Domain::Target,
        RegimeKind::Observational,
        n_o,
        derive_seed(seed, &[tag("obs")]),
    )?;
    let covariates = spec.covariates();
    Ok(SimData {
        spec,
        do_,
        covariates,
    })
}

fn experimental(data: &SimData, seed: u64, n_e: usize) -> Result<Dataset> {
    draw(
        &data.spec,
        Domain::Source,
        RegimeKind::Experimental,
        n_e,
        derive_seed(seed, &[tag("exp"), n_e as u64]),
    )
}

fn make_scorer<'a>(
    choice: ScorerChoice,
    de: &'a Dataset,
    do_: &'a Dataset,
    y: &str,
    x: &str,
    prior: PriorSpec,
    mcmc: McmcConfig,
    hz_prior: f64,
    cache: &'a PosteriorCache,
) -> Result<Box<dyn SetScorer + 'a>> {
    Ok(match choice {
        ScorerChoice::Discrete { bins } => {
            Box::new(DiscreteScorer::new(de, do_, y, x, bins, hz_prior)?)
        }
        ScorerChoice::Mcmc => Box::new(McmcScorer::new(
            de, do_, y, x, prior, mcmc, hz_prior, cache,
        )?),
    })
}

#[derive(Default)]
struct SimOutput {
    auc: Vec<AucRow>,
    ce: Vec<CeRow>,
    search: Vec<SearchRow>,
    failures: Vec<Failure>,
}

fn run_sim(cfg: &ExperimentConfig, sim: usize) -> SimOutput {
    let mut out = SimOutput::default();
    let seed = sim_seed(cfg.seed, sim);
    let prepared = prepare(cfg.scenario, seed, cfg.n_o).and_then(|data| {
        let test = draw(
            &data.spec,
            Domain::Target,
            RegimeKind::Experimental,
            cfg.n_test,
            derive_seed(seed, &[tag("test")]),
        )?;
        Ok((data, test))
    });
    let (data, test) = match prepared {
        Ok(v) => v,
        Err(e) => {
            out.failures.push(Failure {
                sim,
                n_e: None,
                error: e.to_string(),
            });
            return out;
        }
    };
    let cache = PosteriorCache::default();
    let mut fits: HashMap<(Source, Vec<String>), f64> = HashMap::new();
    for &n_e in &cfg.n_e {
        if let Err(e) = run_cell(
            cfg, sim, seed, n_e, &data, &test, &cache, &mut fits, &mut out,
        ) {
            out.failures.push(Failure {
                sim,
                n_e: Some(n_e),
                error: e.to_string(),
            });
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    sim: usize,
    seed: u64,
    n_e: usize,
    data: &SimData,
    test: &Dataset,
    cache: &PosteriorCache,
    observational_fits: &mut HashMap<(Source, Vec<String>), f64>,
    out: &mut SimOutput,
) -> Result<()> {
    let spec = &data.spec;
    let (y, x) = (spec.outcome(), spec.treatment());
    let de = experimental(data, seed, n_e)?;
    let mcmc = McmcConfig {
        seed: derive_seed(seed, &[tag("score")]),
        strict: false,
        ..cfg.mcmc.clone()
    };
    let scorer = make_scorer(
        cfg.scorer,
        &de,
        &data.do_,
        y,
        x,
        cfg.prior,
        mcmc.clone(),
        cfg.hz_prior,
        cache,
    )?;
    let scorer = CachedScorer::new(scorer.as_ref());
    let cands: Vec<&str> = data.covariates.iter().map(String::as_str).collect();

    let d = spec.diagram();
    let ranked = exhaustive_sabs(&scorer, &cands)?;
    let mut auc_rows = Vec::new();
    for z in canonical_subsets(&cands) {
        let s: &ScoreResult = ranked
            .iter()
            .find(|s| s.set.iter().map(String::as_str).eq(z.iter().copied()))
            .expect("every subset is ranked");
        let ids = z.iter().map(|v| d.require(v)).collect::<Result<Vec<_>>>()?;
        let label = is_sabs(d, d.treatment(), d.outcome(), &ids)?;
        auc_rows.push(AucRow {
            scenario: cfg.scenario,
            n_e,
            sim,
            subset: set_label(&z),
            posterior: s.posterior,
            label: label as u8,
            log_odds: s.log_odds(),
        });
    }

    let found = find_sabs(
        &scorer,
        &cands,
        &SearchOptions {
            threshold: cfg.threshold,
            ..Default::default()
        },
    )?;
    let warnings = found
        .score
        .diagnostics
        .as_ref()
        .map_or(0, |d| d.warnings.len());
    out.search.push(SearchRow {
        scenario: cfg.scenario,
        n_e,
        sim,
        z_star: set_label(&found.z_star),
        posterior: found.posterior,
        decision: decision_str(found.decision).into(),
        steps: found.steps,
        warnings,
    });

    let fit_opts = FitOptions {
        bins: match cfg.scorer {
            ScorerChoice::Discrete { bins: Some(k) } => {
                Some(Binning::quantiles(&data.do_, &cands, k)?)
            }
            _ => None,
        },
        prior: cfg.prior,
        mcmc: McmcConfig {
            seed: derive_seed(seed, &[tag("fit")]),
            ..cfg.mcmc.clone()
        },
    };
    let model = cfg.scorer.model();
    let mut ce_of = |source: Source, z: &[&str]| -> Result<f64> {
        let key = (source, z.iter().map(|s| s.to_string()).collect::<Vec<_>>());
        if source == Source::Observational {
            if let Some(&v) = observational_fits.get(&key) {
                return Ok(v);
            }
        }
        let est = fit_estimator(&de, &data.do_, y, x, z, source, model, &fit_opts)?;
        let v = cross_entropy(&est, test)?;
        if source == Source::Observational {
            observational_fits.insert(key, v);
        }
        Ok(v)
    };
    let all = set_label(&cands);
    let mut ce = Vec::new();
    let mut pooled_all = f64::NAN;
    for source in [Source::Experimental, Source::Observational, Source::Pooled] {
        let v = ce_of(source, &cands)?;
        if source == Source::Pooled {
            pooled_all = v;
        }
        ce.push((source.as_str().to_string(), v, all.clone(), String::new()));
    }
    let z_star: Vec<&str> = found.z_star.iter().map(String::as_str).collect();
    let finds_ce = match found.decision {
        Decision::Estimate if z_star == cands => pooled_all,
        Decision::Estimate => ce_of(Source::Pooled, &z_star)?,
        Decision::NotFound => f64::NAN,
    };
    ce.push((
        FINDSABS.to_string(),
        finds_ce,
        set_label(&z_star),
        decision_str(found.decision).to_string(),
    ));
    out.auc.extend(auc_rows);
    out.ce
        .extend(ce.into_iter().map(|(method, v, z, decision)| CeRow {
            scenario: cfg.scenario,
            n_e,
            sim,
            method,
            cross_entropy: v,
            z_star: z,
            decision,
        }));
    Ok(())
}

fn in_pool<T: Send>(jobs: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    if jobs <= 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| input(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Runs `n_sims` independent simulations. Each one redraws the scenario's
/// parameters, one observational sample and one test sample, then for each
/// experimental size scores all covariate subsets, runs the search and
/// evaluates the estimators. Failures are recorded, not dropped.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.check()?;
    if let (ScorerChoice::Discrete { bins: None }, false) = (cfg.scorer, cfg.scenario.is_discrete())
    {
        return Err(input(
            "the discrete scorer needs --bins on scenarios with continuous covariates",
        ));
    }
    let outputs = in_pool(cfg.jobs, cfg.n_sims, |sim| run_sim(cfg, sim))?;
    let mut report = ExperimentReport {
        config: cfg.clone(),
        auc: Vec::new(),
        ce: Vec::new(),
        search: Vec::new(),
        failures: Vec::new(),
    };
    for o in outputs {
        report.auc.extend(o.auc);
        report.ce.extend(o.ce);
        report.search.extend(o.search);
        report.failures.extend(o.failures);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub scenario: Scenario,
    pub n_sims: usize,
    pub n_o: usize,
    pub n_e: Vec<usize>,
    pub priors: (f64, f64),
    pub scorer: ScorerChoice,
    pub seed: u64,
    pub prior: PriorSpec,
    pub mcmc: McmcConfig,
    pub jobs: usize,
}

impl AblationConfig {
    pub fn paper(scenario: Scenario) -> Self {
        let base = ExperimentConfig::paper(scenario);
        AblationConfig {
            scenario,
            n_sims: 100,
            n_o: base.n_o,
            n_e: base.n_e,
            priors: (0.1, 0.9),
            scorer: base.scorer,
            seed: 0,
            prior: base.prior,
            mcmc: base.mcmc,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub sim: usize,
    pub n_e: usize,
    pub p_low: f64,
    pub p_high: f64,
    pub abs_diff: f64,
}

/// `|P_low - P_high|` for the full covariate set, where `P_p` is the
/// posterior of h_Z under prior `p`. Both come from one pair of marginals.
pub fn prior_ablation(cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    if cfg.n_sims == 0 || cfg.n_e.is_empty() || cfg.jobs == 0 {
        return Err(input(
            "ablation needs simulations, sample sizes and at least one job",
        ));
    }
    crate::score::check_prior(cfg.priors.0)?;
    crate::score::check_prior(cfg.priors.1)?;
    let per_sim = in_pool(cfg.jobs, cfg.n_sims, |sim| -> Result<Vec<AblationRow>> {
        let seed = sim_seed(cfg.seed, sim);
        let data = prepare(cfg.scenario, seed, cfg.n_o)?;
        let (y, x) = (data.spec.outcome(), data.spec.treatment());
        let cands: Vec<&str> = data.covariates.iter().map(String::as_str).collect();
        let cache = PosteriorCache::default();
        let mcmc = McmcConfig {
            seed: derive_seed(seed, &[tag("score")]),
            strict: false,
            ..cfg.mcmc.clone()
        };
        cfg.n_e
            .iter()
            .map(|&n_e| {
                let de = experimental(&data, seed, n_e)?;
                let scorer = make_scorer(
                    cfg.scorer,
                    &de,
                    &data.do_,
                    y,
                    x,
                    cfg.prior,
                    mcmc.clone(),
                    0.5,
                    &cache,
                )?;
                let s = scorer.score(&cands)?;
                let p_low = s.with_prior(cfg.priors.0)?.posterior;
                let p_high = s.with_prior(cfg.priors.1)?.posterior;
                Ok(AblationRow {
                    sim,
                    n_e,
                    p_low,
                    p_high,
                    abs_diff: (p_low - p_high).abs(),
                })
            })
            .collect()
    })?;
    let mut rows = Vec::new();
    for r in per_sim {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sim", "n_e", "p_low", "p_high", "abs_diff"])?;
    for r in rows {
        w.serialize((r.sim, r.n_e, r.p_low, r.p_high, r.abs_diff))?;
    }
    w.flush()?;
    Ok(())
}
