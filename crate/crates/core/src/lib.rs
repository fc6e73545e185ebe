//! Data-driven testing and search for s-admissible backdoor sets: covariate
//! sets that let source-domain experimental data and target-domain
//! observational data be pooled to estimate a conditional causal effect in
//! the target.

pub mod data;
pub mod discrete;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod mcmc;
pub mod score;
pub mod search;
pub mod sim;

pub use data::{Dataset, Domain, Regime, VarType};
pub use error::{Error, Result};
pub use graph::{NodeId, NodeKind, SelectionDiagram};
pub use score::ScoreResult;
pub use sim::{RegimeKind, Scenario, ScmSpec};
