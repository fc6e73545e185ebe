use std::fmt;
use std::fs;
use std::path::Path;

use sabs_core::data::Domain;
use sabs_core::discrete::Binning;
use sabs_core::estimate::{
    fit_estimator, median, prior_ablation, run_experiment, write_ablation_csv, AblationConfig,
    ExperimentConfig, FitOptions, Model, ScorerChoice, Source, FINDSABS,
};
use sabs_core::mcmc::{McmcConfig, McmcDiagnostics, PriorSpec};
use sabs_core::search::{
    find_sabs, CachedScorer, Decision, DiscreteScorer, McmcScorer, PosteriorCache, SearchOptions,
    SetScorer,
};
use sabs_core::sim::rng::{derive_seed, tag};
use sabs_core::sim::{sample, RegimeKind};
use sabs_core::{Dataset, Error, ScmSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{ExperimentArgs, FindArgs, ModelArgs, ScoreArgs, ScorerKind, SimulateArgs};

pub enum CliError {
    Usage(String),
    Core(Error),
    /// Output was written but the sampler diagnostics failed.
    Convergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(Error::Convergence(_)) | CliError::Convergence(_) => 4,
            CliError::Core(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Stamp attached to every artifact so the run can be reproduced from it.
fn provenance(command: &str, config: Value) -> Value {
    json!({
        "tool": "sabs",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    })
}

fn emit(out: Option<&Path>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn draw(
    spec: &ScmSpec,
    domain: Domain,
    regime: RegimeKind,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Ok(sample(spec, domain, regime, 1, seed)?.take_rows(&[])?);
    }
    Ok(sample(spec, domain, regime, n, seed)?)
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    scenario: Option<String>,
    spec_file: Option<&'a Path>,
    n_obs: usize,
    n_exp: usize,
    n_test: Option<usize>,
    seed: u64,
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = match (&a.scenario, &a.spec) {
        (Some(s), _) => s.build(derive_seed(a.seed, &[tag("spec")]))?,
        (None, Some(p)) => ScmSpec::from_json(&fs::read_to_string(p)?)?,
        (None, None) => return Err(CliError::Usage("give --scenario or --spec".into())),
    };
    let cfg = SimulateConfig {
        scenario: a.scenario.map(|s| s.to_string()),
        spec_file: a.spec.as_deref(),
        n_obs: a.n_obs,
        n_exp: a.n_exp,
        n_test: a.n_test,
        seed: a.seed,
    };
    let prov = provenance("simulate", serde_json::to_value(&cfg)?);
    fs::create_dir_all(&a.out)?;
    let obs = draw(
        &spec,
        Domain::Target,
        RegimeKind::Observational,
        a.n_obs,
        derive_seed(a.seed, &[tag("obs")]),
    )?;
    let exp = draw(
        &spec,
        Domain::Source,
        RegimeKind::Experimental,
        a.n_exp,
        derive_seed(a.seed, &[tag("exp")]),
    )?;
    obs.write_csv(&a.out.join("obs.csv"), Some(&prov))?;
    exp.write_csv(&a.out.join("exp.csv"), Some(&prov))?;
    if let Some(n) = a.n_test {
        let test = draw(
            &spec,
            Domain::Target,
            RegimeKind::Experimental,
            n,
            derive_seed(a.seed, &[tag("test")]),
        )?;
        test.write_csv(&a.out.join("test.csv"), Some(&prov))?;
    }
    fs::write(a.out.join("spec.json"), spec.to_json()? + "\n")?;
    emit(Some(&a.out.join("manifest.json")), &prov)?;
    println!(
        "wrote {} ({} observational, {} experimental rows)",
        a.out.display(),
        obs.n(),
        exp.n()
    );
    Ok(())
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(String::from)
        .collect()
}

fn mcmc_config(m: &ModelArgs) -> McmcConfig {
    McmcConfig {
        n_samples: m.mcmc_samples,
        burn_in: m.burn_in,
        thin: m.thin,
        seed: m.seed,
        strict: m.strict_ess,
        ..Default::default()
    }
}

fn model_config(m: &ModelArgs) -> Value {
    json!({
        "exp": m.exp,
        "obs": m.obs,
        "y": m.y,
        "x": m.x,
        "scorer": m.scorer,
        "bins": m.bins,
        "prior": m.prior,
        "seed": m.seed,
        "mcmc": mcmc_config(m),
        "prior_spec": PriorSpec::default(),
    })
}

struct Loaded {
    de: Dataset,
    do_: Dataset,
    cache: PosteriorCache,
}

fn load(m: &ModelArgs) -> Result<Loaded> {
    Ok(Loaded {
        de: Dataset::read_csv(&m.exp)?,
        do_: Dataset::read_csv(&m.obs)?,
        cache: PosteriorCache::default(),
    })
}

fn scorer<'a>(m: &ModelArgs, l: &'a Loaded) -> Result<Box<dyn SetScorer + 'a>> {
    Ok(match m.scorer {
        ScorerKind::Discrete => Box::new(DiscreteScorer::new(
            &l.de, &l.do_, &m.y, &m.x, m.bins, m.prior,
        )?),
        ScorerKind::Mcmc => Box::new(McmcScorer::new(
            &l.de,
            &l.do_,
            &m.y,
            &m.x,
            PriorSpec::default(),
            mcmc_config(m),
            m.prior,
            &l.cache,
        )?),
    })
}

fn check_chain(d: Option<&McmcDiagnostics>) -> Result<()> {
    match d {
        Some(d) if !d.chain_converged() => Err(CliError::Convergence(d.warnings.join("; "))),
        _ => Ok(()),
    }
}

pub fn score(a: ScoreArgs) -> Result<()> {
    let m = &a.model;
    let l = load(m)?;
    let set = parse_list(&a.set);
    let z: Vec<&str> = set.iter().map(String::as_str).collect();
    let s = scorer(m, &l)?.score(&z)?;
    let mut cfg = model_config(m);
    cfg["set"] = json!(set);
    let mut out = provenance("score", cfg);
    out["result"] = serde_json::to_value(&s)?;
    out["log_odds"] = json!(s.log_odds());
    emit(m.out.as_deref(), &out)?;
    check_chain(s.diagnostics.as_ref())
}

pub fn find(a: FindArgs) -> Result<()> {
    let m = &a.model;
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(CliError::Usage("--threshold must lie in [0, 1]".into()));
    }
    let l = load(m)?;
    let cands = match &a.candidates {
        Some(c) => parse_list(c),
        None => l
            .do_
            .names()
            .iter()
            .filter(|n| **n != m.y && **n != m.x)
            .cloned()
            .collect(),
    };
    let c: Vec<&str> = cands.iter().map(String::as_str).collect();
    let inner = scorer(m, &l)?;
    let cached = CachedScorer::new(inner.as_ref());
    let opts = SearchOptions {
        threshold: a.threshold,
        ..Default::default()
    };
    let found = find_sabs(&cached, &c, &opts)?;

    let mut cfg = model_config(m);
    cfg["candidates"] = json!(cands);
    cfg["threshold"] = json!(a.threshold);
    cfg["query"] = json!(a.query);
    let mut out = provenance("find", cfg);
    out["result"] = serde_json::to_value(&found)?;
    out["evaluations"] = json!(cached.evaluations());

    if found.decision == Decision::Estimate {
        let (model, bins) = match m.scorer {
            ScorerKind::Discrete => {
                let names: Vec<&str> = l.do_.names().iter().map(String::as_str).collect();
                let bins = m
                    .bins
                    .map(|k| Binning::quantiles(&l.do_, &names, k))
                    .transpose()?;
                (Model::DirichletMultinomial, bins)
            }
            ScorerKind::Mcmc => (Model::BayesianLogistic, None),
        };
        let opts = FitOptions {
            bins,
            prior: PriorSpec::default(),
            mcmc: McmcConfig {
                seed: derive_seed(m.seed, &[tag("fit")]),
                ..mcmc_config(m)
            },
        };
        let z: Vec<&str> = found.z_star.iter().map(String::as_str).collect();
        let est = fit_estimator(&l.de, &l.do_, &m.y, &m.x, &z, Source::Pooled, model, &opts)?;
        out["estimator"] = json!({
            "y": est.y,
            "x": est.x,
            "z": est.z,
            "source": est.source,
            "model": est.model,
        });
        if let Some(q) = &a.query {
            let rows = Dataset::read_csv(q)?;
            out["predictions"] = serde_json::to_value(est.predict(&rows)?)?;
        }
    }
    emit(m.out.as_deref(), &out)?;
    check_chain(found.score.diagnostics.as_ref())
}

#[derive(Deserialize)]
struct Manifest {
    config: ExperimentConfig,
}

fn base_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    if v.get("config").is_some() {
        Ok(serde_json::from_value::<Manifest>(v)?.config)
    } else {
        Ok(serde_json::from_value(v)?)
    }
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = match (&a.config, a.scenario) {
        (Some(p), _) => base_config(p)?,
        (None, Some(s)) => ExperimentConfig::paper(s),
        (None, None) => return Err(CliError::Usage("give --scenario or --config".into())),
    };
    if let Some(s) = a.scenario {
        if s != cfg.scenario {
            let scorer_was_default = cfg.scorer == ExperimentConfig::paper(cfg.scenario).scorer;
            cfg.scenario = s;
            if scorer_was_default {
                cfg.scorer = ExperimentConfig::paper(s).scorer;
            }
        }
    }
    if let Some(v) = a.sims {
        cfg.n_sims = v as usize;
    }
    if let Some(v) = a.n_obs {
        cfg.n_o = v;
    }
    if let Some(v) = a.n_exp {
        cfg.n_e = v;
    }
    if let Some(v) = a.n_test {
        cfg.n_test = v;
    }
    match (a.scorer, a.bins) {
        (Some(ScorerKind::Mcmc), _) => cfg.scorer = ScorerChoice::Mcmc,
        (Some(ScorerKind::Discrete), bins) => cfg.scorer = ScorerChoice::Discrete { bins },
        (None, Some(b)) => match cfg.scorer {
            ScorerChoice::Discrete { .. } => cfg.scorer = ScorerChoice::Discrete { bins: Some(b) },
            ScorerChoice::Mcmc => {
                return Err(CliError::Usage(
                    "--bins applies to the discrete scorer".into(),
                ))
            }
        },
        (None, None) => {}
    }
    if let Some(v) = a.threshold {
        cfg.threshold = v;
    }
    if let Some(v) = a.prior {
        cfg.hz_prior = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.mcmc_samples {
        cfg.mcmc.n_samples = v;
    }
    if let Some(v) = a.burn_in {
        cfg.mcmc.burn_in = v;
    }
    if let Some(v) = a.thin {
        cfg.mcmc.thin = v;
    }
    if let Some(v) = a.jobs {
        cfg.jobs = v as usize;
    }
    if cfg.n_e.is_empty() {
        return Err(CliError::Usage("--n-exp needs at least one size".into()));
    }
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(CliError::Usage("--threshold must lie in [0, 1]".into()));
    }

    let report = run_experiment(&cfg)?;
    report.write_csvs(&a.out)?;
    let ablation = if a.ablation {
        let ab = AblationConfig {
            scenario: cfg.scenario,
            n_sims: cfg.n_sims,
            n_o: cfg.n_o,
            n_e: cfg.n_e.clone(),
            priors: (0.1, 0.9),
            scorer: cfg.scorer,
            seed: cfg.seed,
            prior: cfg.prior,
            mcmc: cfg.mcmc.clone(),
            jobs: cfg.jobs,
        };
        let rows = prior_ablation(&ab)?;
        write_ablation_csv(&a.out.join("ablation.csv"), &rows)?;
        Some(ab)
    } else {
        None
    };

    let mut summary = Vec::new();
    for (n_e, auc) in report.auc_by_n_e() {
        let mut row = json!({ "n_e": n_e, "auc": auc.ok() });
        for method in ["De", "Do*", "De+Do*", FINDSABS] {
            row["median_ce"][method] = json!(median(&report.ce_by_sim(method, n_e)));
        }
        row["not_found"] = json!(report
            .search
            .iter()
            .filter(|s| s.n_e == n_e && s.decision == "NaN")
            .count());
        summary.push(row);
    }
    let mut manifest = provenance("experiment", serde_json::to_value(&cfg)?);
    manifest["ablation"] = serde_json::to_value(&ablation)?;
    manifest["failures"] = json!(report.failures.len());
    manifest["summary"] = json!(summary);
    emit(Some(&a.out.join("manifest.json")), &manifest)?;
    for row in &summary {
        println!("{row}");
    }
    Ok(())
}
