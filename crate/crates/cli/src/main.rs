//! `sabs`: simulate data, score covariate sets, search for an s-admissible
//! backdoor set, and run the simulation experiments.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or model error,
//! 4 sampler convergence failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sabs_core::Scenario;

#[derive(Parser, Debug)]
#[command(
    name = "sabs",
    version,
    about = "Test and search for s-admissible backdoor sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw target observational and source experimental datasets.
    Simulate(SimulateArgs),
    /// Posterior probability that one covariate set is an sABS.
    Score(ScoreArgs),
    /// Greedy search for an sABS, optionally predicting on a query file.
    Find(FindArgs),
    /// Repeated simulations: AUC and cross-entropy tables.
    Experiment(ExperimentArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScorerKind {
    Discrete,
    Mcmc,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// 1, 2, 1-discrete or 2-discrete.
    #[arg(long, required_unless_present = "spec")]
    scenario: Option<Scenario>,
    /// JSON model specification instead of a built-in scenario.
    #[arg(long, conflicts_with = "scenario")]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 5000)]
    n_obs: usize,
    #[arg(long, default_value_t = 300)]
    n_exp: usize,
    /// Also draw a target experimental test set of this size.
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Source experimental dataset (CSV with schema sidecar).
    #[arg(long)]
    exp: PathBuf,
    /// Target observational dataset.
    #[arg(long)]
    obs: PathBuf,
    #[arg(long, default_value = "Y")]
    y: String,
    #[arg(long, default_value = "X")]
    x: String,
    #[arg(long, value_enum, default_value_t = ScorerKind::Discrete)]
    scorer: ScorerKind,
    /// Quantile bins for continuous covariates (discrete scorer).
    #[arg(long)]
    bins: Option<usize>,
    /// Prior probability of the sABS hypothesis.
    #[arg(long, default_value_t = 0.5)]
    prior: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    mcmc_samples: usize,
    #[arg(long, default_value_t = 2000)]
    burn_in: usize,
    #[arg(long, default_value_t = 5)]
    thin: usize,
    /// Fail (exit 4) when the prior average has too few effective draws.
    #[arg(long)]
    strict_ess: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated covariates; empty for the empty set.
    #[arg(long, default_value = "")]
    set: String,
}

#[derive(Args, Debug)]
struct FindArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated candidates; defaults to every column but Y and X.
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Rows to predict P(Y | X, Z*) for when a set is found.
    #[arg(long)]
    query: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Base configuration: a manifest written by an earlier run, or a bare
    /// config object. Flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    sims: Option<u64>,
    #[arg(long)]
    n_obs: Option<usize>,
    /// Comma-separated experimental sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_exp: Option<Vec<usize>>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long, value_enum)]
    scorer: Option<ScorerKind>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    prior: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mcmc_samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Also run the prior ablation (priors 0.1 and 0.9) and write ablation.csv.
    #[arg(long)]
    ablation: bool,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Score(a) => commands::score(a),
        Command::Find(a) => commands::find(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sabs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
