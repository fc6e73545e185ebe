use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sabs_bench::pair;
use sabs_core::graph::fixtures::fig2d;
use sabs_core::graph::{enumerate_sabs, NodeKind};
use sabs_core::mcmc::{probs_abs, McmcConfig, PriorSpec};
use sabs_core::search::{find_sabs, DiscreteScorer, SearchOptions, SetScorer};
use sabs_core::Scenario;

fn graph(c: &mut Criterion) {
    let d = fig2d();
    let cands: Vec<_> = d
        .nodes_of_kind(NodeKind::Observed)
        .into_iter()
        .filter(|&v| v != d.treatment() && v != d.outcome())
        .collect();
    c.bench_function("enumerate_sabs fig2d", |b| {
        b.iter(|| enumerate_sabs(&d, d.treatment(), d.outcome(), black_box(&cands)).unwrap())
    });
}

fn discrete(c: &mut Criterion) {
    let (de, do_) = pair(Scenario::Discrete1, 5000, 300, 1);
    let scorer = DiscreteScorer::new(&de, &do_, "Y", "X", None, 0.5).unwrap();
    c.bench_function("discrete score {Z,W}", |b| {
        b.iter(|| scorer.score(black_box(&["Z", "W"])).unwrap())
    });
    c.bench_function("discrete find_sabs", |b| {
        b.iter(|| find_sabs(&scorer, &["Z", "W"], &SearchOptions::default()).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let (de, do_) = pair(Scenario::Mixed1, 1000, 100, 2);
    let cfg = McmcConfig {
        n_samples: 300,
        burn_in: 300,
        ..Default::default()
    };
    let mut g = c.benchmark_group("mcmc");
    g.sample_size(10);
    g.bench_function("probs_abs {Z,W} small", |b| {
        b.iter(|| {
            probs_abs(
                &de,
                &do_,
                "Y",
                "X",
                &["Z", "W"],
                &PriorSpec::default(),
                &cfg,
                0.5,
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, graph, discrete, sampling);
criterion_main!(benches);
