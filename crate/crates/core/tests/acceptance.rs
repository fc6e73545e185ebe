//! Acceptance criteria 1–11. Prints one PASS/FAIL line per criterion; set
//! SABS_ACCEPTANCE_STRICT to exit non-zero on any failure. Pass criterion
//! numbers to run a subset: `cargo test -p sabs-core --test acceptance -- 4 5`.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sabs_core::data::{Dataset, Domain, Regime, VarType};
use sabs_core::discrete::{
    conditional_entropy, log_ml_h, log_ml_not_h, ContingencyCounts, CountSource, CountTable,
};
use sabs_core::estimate::{
    median, prior_ablation, run_experiment, sign_test, AblationConfig, ExperimentConfig,
    ExperimentReport, FINDSABS,
};
use sabs_core::graph::fixtures::{fig1c, fig2a, fig2b, fig2c, fig2d};
use sabs_core::graph::{
    canonical_subsets, d_separated, enumerate_sabs, is_backdoor_set, is_s_admissible, is_sabs, Dag,
    Manipulation, NodeId, NodeKind, SelectionDiagram, Slice,
};
use sabs_core::mcmc::{sample_posterior, McmcConfig, PriorSpec};
use sabs_core::search::{DiscreteScorer, SetScorer};
use sabs_core::sim::rng::{derive_seed, tag};
use sabs_core::sim::{discrete_scenario1, sample, with_noise_covariate, RegimeKind, Scenario};
use support::*;

type Check = fn() -> (bool, String);

struct Criterion {
    id: usize,
    name: &'static str,
    limit: Duration,
    run: Check,
}

fn jobs() -> usize {
    std::env::var("SABS_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn main() {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let min = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion {
            id: 1,
            name: "score matches prequential oracle",
            limit: Duration::from_secs(5),
            run: c1,
        },
        Criterion {
            id: 2,
            name: "d-separation matches path enumeration",
            limit: Duration::from_secs(30),
            run: c2,
        },
        Criterion {
            id: 3,
            name: "fixture caption labels",
            limit: Duration::from_secs(5),
            run: c3,
        },
        Criterion {
            id: 4,
            name: "posterior consistency in N",
            limit: min(2),
            run: c4,
        },
        Criterion {
            id: 5,
            name: "independent covariate lowers the score",
            limit: min(2),
            run: c5,
        },
        Criterion {
            id: 6,
            name: "scenario 1 AUC by N_e",
            limit: min(20),
            run: c6,
        },
        Criterion {
            id: 7,
            name: "scenario 2 cross-entropy ordering",
            limit: min(20),
            run: c7,
        },
        Criterion {
            id: 8,
            name: "scenario 1 parity at N_e=50",
            limit: min(20),
            run: c8,
        },
        Criterion {
            id: 9,
            name: "prior influence shrinks with N_e",
            limit: min(5),
            run: c9,
        },
        Criterion {
            id: 10,
            name: "pooled entropy inequality",
            limit: min(5),
            run: c10,
        },
        Criterion {
            id: 11,
            name: "sampler calibration",
            limit: min(5),
            run: c11,
        },
    ];
    println!("acceptance: {} worker thread(s)", jobs());
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| wanted.is_empty() || wanted.contains(&c.id))
    {
        let t0 = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        let took = t0.elapsed();
        let in_time = took <= c.limit;
        let pass = ok && in_time;
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {} [{:.1}s / {}s{}] {}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { ", over time" },
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        // Reported, not gating, unless asked.
        if std::env::var_os("SABS_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}

fn c1() -> (bool, String) {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (q, k) = (r.random_range(1..=4), r.random_range(2..=3));
        let c = ContingencyCounts::new(
            random_table(&mut r, q, k, 50),
            random_table(&mut r, q, k, 50),
        )
        .unwrap();
        let h = prequential_log_ml(&c, true, &mut r);
        let nh = prequential_log_ml(&c, false, &mut r);
        worst = worst
            .max((log_ml_h(&c) - h).exp_m1().abs())
            .max((log_ml_not_h(&c) - nh).exp_m1().abs());
    }
    (
        worst <= 1e-9,
        format!("max relative error {worst:.2e} over 200 tables"),
    )
}

fn c2() -> (bool, String) {
    let mut r = rng(2);
    let (mut queries, mut mismatches) = (0usize, 0usize);
    for _ in 0..500 {
        let n = r.random_range(2..=6);
        let p = r.random_range(0.2..0.7);
        let edges = random_dag(&mut r, n, p);
        let dag = Dag::from_edges(n, &edges).unwrap();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
                for z in canonical_subsets(&rest) {
                    let zi: Vec<NodeId> = z.iter().map(|&v| NodeId(v)).collect();
                    let got = d_separated(&dag, &[NodeId(a)], &[NodeId(b)], &zi).unwrap();
                    queries += 1;
                    mismatches += usize::from(got != brute_force_dsep(n, &edges, &[a], &[b], &z));
                }
            }
        }
    }
    (
        mismatches == 0,
        format!("{mismatches} mismatches in {queries} queries on 500 DAGs"),
    )
}

fn c3() -> (bool, String) {
    type Crit = fn(&SelectionDiagram, NodeId, NodeId, &[NodeId]) -> sabs_core::Result<bool>;
    let ids = |d: &SelectionDiagram, z: &[&str]| -> Vec<NodeId> {
        z.iter().map(|v| d.require(v).unwrap()).collect()
    };
    let check = |d: &SelectionDiagram, f: Crit, z: &[&str]| {
        f(d, d.treatment(), d.outcome(), &ids(d, z)).unwrap()
    };
    let zw = ["Z", "W"];
    let (a, b, c, d1c, d) = (fig2a(), fig2b(), fig2c(), fig1c(), fig2d());
    let view = d1c.view(Slice::Full, Manipulation::RemoveInto(d1c.treatment()));
    let claims = [
        (
            "1c: {Z,W} s-admissible",
            d_separated(
                &view,
                &[d1c.outcome()],
                &d1c.nodes_of_kind(NodeKind::Selection),
                &ids(&d1c, &zw),
            )
            .unwrap(),
        ),
        ("2a: {Z,W} sABS", check(&a, is_sabs, &zw)),
        ("2c: {Z,W} backdoor", check(&c, is_backdoor_set, &zw)),
        (
            "2c: {Z,W} not s-admissible",
            !check(&c, is_s_admissible, &zw),
        ),
        ("2b: {Z,W} s-admissible", check(&b, is_s_admissible, &zw)),
        ("2b: {Z,W} not backdoor", !check(&b, is_backdoor_set, &zw)),
        (
            "2b: no sABS",
            enumerate_sabs(&b, b.treatment(), b.outcome(), &ids(&b, &zw))
                .unwrap()
                .is_empty(),
        ),
        ("2d: {W} sABS", check(&d, is_sabs, &["W"])),
        ("2d: {} sABS", check(&d, is_sabs, &[])),
        ("2d: {Z,W} not backdoor", !check(&d, is_backdoor_set, &zw)),
        (
            "2d: {Z,W} not s-admissible",
            !check(&d, is_s_admissible, &zw),
        ),
    ];
    let wrong: Vec<&str> = claims
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| *n)
        .collect();
    (
        wrong.is_empty(),
        format!(
            "{}/{} claims hold {wrong:?}",
            claims.len() - wrong.len(),
            claims.len()
        ),
    )
}

/// Draws `(D_e, D_o*)` with `n_e` and `n_o` rows from discrete scenario 1,
/// optionally with an extra isolated covariate `N`.
fn discrete_pair(seed: u64, n_o: usize, n_e: usize, noise: bool) -> (Dataset, Dataset) {
    let mut spec = discrete_scenario1(derive_seed(seed, &[tag("spec")])).unwrap();
    if noise {
        spec = with_noise_covariate(&spec, "N", 4, derive_seed(seed, &[tag("noise")])).unwrap();
    }
    let do_ = sample(
        &spec,
        Domain::Target,
        RegimeKind::Observational,
        n_o,
        derive_seed(seed, &[tag("obs")]),
    )
    .unwrap();
    let de = sample(
        &spec,
        Domain::Source,
        RegimeKind::Experimental,
        n_e,
        derive_seed(seed, &[tag("exp")]),
    )
    .unwrap();
    (de, do_)
}

fn c4() -> (bool, String) {
    let sizes = [500, 2000, 8000];
    let subsets: [&[&str]; 4] = [&[], &["Z"], &["W"], &["Z", "W"]];
    // [subset][size] -> (posteriors, log-odds) over seeds
    let mut post = vec![vec![Vec::new(); sizes.len()]; subsets.len()];
    let mut lo = post.clone();
    for (i, &n) in sizes.iter().enumerate() {
        for seed in 0..20u64 {
            let (de, do_) = discrete_pair(seed, n, n, false);
            let scorer = DiscreteScorer::new(&de, &do_, "Y", "X", None, 0.5).unwrap();
            for (s, z) in subsets.iter().enumerate() {
                let r = scorer.score(z).unwrap();
                post[s][i].push(r.posterior);
                lo[s][i].push(r.log_odds());
            }
        }
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for (s, z) in subsets.iter().enumerate() {
        let mp: Vec<f64> = post[s].iter().map(|v| median(v)).collect();
        let ml: Vec<f64> = lo[s].iter().map(|v| median(v)).collect();
        let sabs = z.len() == 2;
        let this = if sabs {
            ml.windows(2).all(|w| w[1] > w[0])
                && mp.windows(2).all(|w| w[1] >= w[0])
                && mp[2] > 0.95
        } else {
            ml.windows(2).all(|w| w[1] < w[0])
                && mp.windows(2).all(|w| w[1] <= w[0])
                && mp[2] < 0.05
        };
        ok &= this;
        detail.push(format!(
            "{{{}}}: P={:.3}/{:.3}/{:.3} logodds={:.1}/{:.1}/{:.1}",
            z.join(","),
            mp[0],
            mp[1],
            mp[2],
            ml[0],
            ml[1],
            ml[2]
        ));
    }
    (ok, detail.join("; "))
}

fn c5() -> (bool, String) {
    let mut wins = 0;
    let mut diffs = Vec::new();
    for seed in 0..20u64 {
        let (de, do_) = discrete_pair(seed, 8000, 8000, true);
        let base = log_ml_h(
            &ContingencyCounts::from_data(&de, &do_, "Y", "X", &["Z", "W"], None).unwrap(),
        );
        let aug = log_ml_h(
            &ContingencyCounts::from_data(&de, &do_, "Y", "X", &["Z", "W", "N"], None).unwrap(),
        );
        wins += usize::from(base > aug);
        diffs.push(base - aug);
    }
    (
        wins >= 18,
        format!(
            "{wins}/20 seeds favour {{Z,W}}; median gap {:.2} nats",
            median(&diffs)
        ),
    )
}

fn experiment_config(scenario: Scenario, n_e: Vec<usize>) -> ExperimentConfig {
    ExperimentConfig {
        n_sims: 30,
        n_e,
        seed: 20240601,
        jobs: jobs(),
        ..ExperimentConfig::paper(scenario)
    }
}

fn scenario1() -> &'static (ExperimentReport, f64) {
    static RUN: OnceLock<(ExperimentReport, f64)> = OnceLock::new();
    RUN.get_or_init(|| {
        let t0 = Instant::now();
        let r = run_experiment(&experiment_config(Scenario::Mixed1, vec![50, 100, 300])).unwrap();
        keep(&r, "scenario1");
        (r, t0.elapsed().as_secs_f64())
    })
}

/// Leaves the tables under the cargo target directory for inspection.
fn keep(r: &ExperimentReport, name: &str) {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    if let Err(e) = r.write_csvs(&dir) {
        println!("could not write {}: {e}", dir.display());
    }
}

fn failures_note(r: &ExperimentReport) -> String {
    let warned = r.search.iter().filter(|s| s.warnings > 0).count();
    format!(
        "{} failed cells, {warned}/{} searches with sampler warnings",
        r.failures.len(),
        r.search.len()
    )
}

fn c6() -> (bool, String) {
    let (r, _) = scenario1();
    let aucs: Vec<f64> = r
        .auc_by_n_e()
        .into_iter()
        .map(|(_, a)| a.unwrap_or(f64::NAN))
        .collect();
    let ok = r.failures.is_empty() && aucs.windows(2).all(|w| w[1] >= w[0]) && aucs[2] >= 0.90;
    (
        ok,
        format!(
            "AUC {:.3}/{:.3}/{:.3} at N_e 50/100/300; {}",
            aucs[0],
            aucs[1],
            aucs[2],
            failures_note(r)
        ),
    )
}

fn c7() -> (bool, String) {
    let r = run_experiment(&experiment_config(Scenario::Mixed2, vec![300])).unwrap();
    keep(&r, "scenario2");
    let finds = r.ce_by_sim(FINDSABS, 300);
    let m = median(&finds);
    let mut ok = r.failures.is_empty();
    let mut parts = vec![format!(
        "FindsABS {m:.4} ({} NaN)",
        finds.iter().filter(|v| v.is_nan()).count()
    )];
    for base in ["De", "Do*", "De+Do*"] {
        let b = median(&r.ce_by_sim(base, 300));
        ok &= m <= b;
        parts.push(format!("{base} {b:.4}"));
    }
    let st = sign_test(&finds, &r.ce_by_sim("De+Do*", 300)).unwrap();
    ok &= st.p_value < 0.01 && st.less > st.greater;
    let z_star: Vec<&str> = r.search.iter().map(|s| s.z_star.as_str()).collect();
    let picked = |s: &str| z_star.iter().filter(|z| **z == s).count();
    parts.push(format!(
        "sign test vs De+Do*: {} lower/{} higher p={:.2e}; Z* = {{}} x{}, {{W}} x{}; {}",
        st.less,
        st.greater,
        st.p_value,
        picked("{}"),
        picked("{W}"),
        failures_note(&r)
    ));
    (ok, parts.join(", "))
}

fn c8() -> (bool, String) {
    let (r, secs) = scenario1();
    let finds = r.ce_by_sim(FINDSABS, 50);
    let obs = r.ce_by_sim("Do*", 50);
    let exp = r.ce_by_sim("De", 50);
    let parity = sign_test(&finds, &obs).unwrap();
    let vs_exp_f = sign_test(&finds, &exp).unwrap();
    let vs_exp_o = sign_test(&obs, &exp).unwrap();
    let ok = r.failures.is_empty()
        && parity.p_value > 0.01
        && vs_exp_f.p_value < 0.01
        && vs_exp_f.less > vs_exp_f.greater
        && vs_exp_o.p_value < 0.01
        && vs_exp_o.less > vs_exp_o.greater;
    (
        ok,
        format!(
            "median CE FindsABS {:.4} Do* {:.4} De {:.4}; FindsABS vs Do* p={:.3}; vs De p={:.2e} (FindsABS), {:.2e} (Do*); shared run {secs:.0}s",
            median(&finds),
            median(&obs),
            median(&exp),
            parity.p_value,
            vs_exp_f.p_value,
            vs_exp_o.p_value
        ),
    )
}

fn c9() -> (bool, String) {
    let cfg = AblationConfig {
        n_sims: 30,
        seed: 7,
        jobs: jobs(),
        ..AblationConfig::paper(Scenario::Discrete1)
    };
    let rows = prior_ablation(&cfg).unwrap();
    let med: Vec<f64> = cfg
        .n_e
        .iter()
        .map(|&n| {
            median(
                &rows
                    .iter()
                    .filter(|r| r.n_e == n)
                    .map(|r| r.abs_diff)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let ok = med.windows(2).all(|w| w[1] < w[0]);
    (
        ok,
        format!(
            "median |P_0.1 - P_0.9| = {:.4}/{:.4}/{:.4} at N_e 50/100/300",
            med[0], med[1], med[2]
        ),
    )
}

fn c10() -> (bool, String) {
    let mut r = rng(10);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let (q, k) = (r.random_range(1..=4), r.random_range(2..=3));
        let n = r.random_range(1..=300);
        let mut tab = || {
            let mut t = CountTable::zeros(q, k);
            for _ in 0..n {
                t.counts[r.random_range(0..q * k)] += 1;
            }
            t
        };
        let c = ContingencyCounts::new(tab(), tab()).unwrap();
        let h = |s| conditional_entropy(&c, s).unwrap();
        worst = worst.min(2.0 * h(CountSource::Pooled) - h(CountSource::Obs) - h(CountSource::Exp));
    }
    let mut gaps = Vec::new();
    for seed in 0..5u64 {
        let (de, do_) = discrete_pair(100 + seed, 20000, 20000, false);
        let c = ContingencyCounts::from_data(&de, &do_, "Y", "X", &["Z", "W"], None).unwrap();
        let h = |s| conditional_entropy(&c, s).unwrap();
        gaps.push(2.0 * h(CountSource::Pooled) - h(CountSource::Obs) - h(CountSource::Exp));
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    let ok = worst >= -1e-12 && gaps.iter().all(|g| *g < 0.01);
    (ok, format!("min slack {worst:.2e} on 1000 equal-size pairs; sABS gap at N=20000 max {max_gap:.2e} over 5 seeds"))
}

fn c11() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n1, n0) in [(70, 130), (20, 80), (150, 50)] {
        let n = n1 + n0;
        let y: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i < n1))).collect();
        let d = Dataset::new(
            vec!["Y".into(), "X".into()],
            vec![VarType::binary(), VarType::binary()],
            vec![y, vec![0.0; n]],
            Domain::Target,
            Regime::Observational,
        )
        .unwrap();
        let post = sample_posterior(
            &d,
            "Y",
            "X",
            &[],
            &PriorSpec::default(),
            &McmcConfig {
                seed: n1 as u64,
                ..Default::default()
            },
        )
        .unwrap();
        let t: Vec<f64> = post.original_scale().iter().map(|p| p.theta[0]).collect();
        let (m, sd) = moments(&t);
        let (qm, qsd) = intercept_posterior_by_quadrature(n1, n0, 10.0);
        let this = (m - qm).abs() <= 0.02 && (sd / qsd - 1.0).abs() <= 0.10;
        ok &= this;
        parts.push(format!(
            "{n1}/{n}: mean {m:.3} vs {qm:.3}, sd {sd:.3} vs {qsd:.3}"
        ));
    }
    let truth = [-0.5, 1.0, 0.8];
    let mut covered = 0;
    let mut total = 0;
    for seed in 0..5u64 {
        let mut r = rng(500 + seed);
        let n = 5000;
        let z: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut r);
                1.5 * e + 2.0
            })
            .collect();
        let x: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(r.random_bool(0.5))))
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = truth[0] + truth[1] * z[i] + truth[2] * x[i];
                f64::from(u8::from(r.random_bool(1.0 / (1.0 + (-eta).exp()))))
            })
            .collect();
        let d = Dataset::new(
            vec!["Y".into(), "X".into(), "Z".into()],
            vec![VarType::binary(), VarType::binary(), VarType::Continuous],
            vec![y, x, z],
            Domain::Target,
            Regime::Observational,
        )
        .unwrap();
        let post = sample_posterior(
            &d,
            "Y",
            "X",
            &["Z"],
            &PriorSpec::default(),
            &McmcConfig {
                seed,
                ..Default::default()
            },
        )
        .unwrap();
        let draws = post.original_scale();
        for (i, t) in truth.iter().enumerate() {
            let col: Vec<f64> = draws.iter().map(|p| p.theta[i]).collect();
            let (m, sd) = moments(&col);
            covered += usize::from((m - t).abs() <= 3.0 * sd);
            total += 1;
        }
    }
    ok &= covered == total;
    parts.push(format!(
        "recovery: {covered}/{total} coordinates within 3 posterior SDs"
    ));
    (ok, parts.join("; "))
}

fn moments(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}
