//! Inputs shared by the benchmarks.

use sabs_core::sim::{sample, RegimeKind, Scenario};
use sabs_core::{Dataset, Domain};

/// `(D_e, D_o*)` drawn from a built-in scenario.
pub fn pair(scenario: Scenario, n_o: usize, n_e: usize, seed: u64) -> (Dataset, Dataset) {
    let spec = scenario.build(seed).expect("built-in scenario");
    let do_ = sample(
        &spec,
        Domain::Target,
        RegimeKind::Observational,
        n_o,
        seed ^ 1,
    )
    .expect("sample");
    let de = sample(
        &spec,
        Domain::Source,
        RegimeKind::Experimental,
        n_e,
        seed ^ 2,
    )
    .expect("sample");
    (de, do_)
}
