//! The simulation scenarios of the experiments, in mixed and all-discrete form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rng::{derive_seed, rng, tag};
use super::{Condition, DomainMechanisms, Mechanism, MechanismKind, ScmSpec};
use crate::error::{input, Result};
use crate::graph::{fixtures, SelectionDiagram};

/// Uniform on `[-hi, -lo] ∪ [lo, hi]`.
fn signed_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = r.random_range(lo..=hi);
    if r.random::<bool>() {
        m
    } else {
        -m
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

const BINARY: (f64, f64) = (0.5, 2.5);
const CONTINUOUS: (f64, f64) = (0.2, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario1Options {
    /// Spread of Z and W in the target.
    pub scale: f64,
    /// Read `scale` as a standard deviation (otherwise as a variance).
    pub scale_is_sd: bool,
    /// Source means of Z and W are shifted by ±U[lo, hi].
    pub shift: (f64, f64),
}

impl Default for Scenario1Options {
    fn default() -> Self {
        Scenario1Options {
            scale: 10.0,
            scale_is_sd: true,
            shift: (5.0, 10.0),
        }
    }
}

/// Mixed Scenario 1 on `fig1c`: Gaussian Z, W whose means differ between
/// domains, X logistic (in Z only in the target, in Z and W in the source),
/// Y logistic in (Z, W, X) in both domains. `{Z, W}` is the only sABS.
pub fn build_scenario1(seed: u64, opts: &Scenario1Options) -> Result<ScmSpec> {
    if !(opts.scale > 0.0) || !(opts.shift.0 <= opts.shift.1) {
        return Err(input(
            "scenario 1 needs a positive scale and an ordered shift range",
        ));
    }
    let mut r = rng(derive_seed(seed, &[tag("scenario1")]));
    let sd = if opts.scale_is_sd {
        opts.scale
    } else {
        opts.scale.sqrt()
    };
    let b = |r: &mut ChaCha8Rng| signed_uniform(r, BINARY.0, BINARY.1);
    let c = |r: &mut ChaCha8Rng| signed_uniform(r, CONTINUOUS.0, CONTINUOUS.1);

    let mut m = BTreeMap::new();
    for v in ["Z", "W"] {
        let shift = signed_uniform(&mut r, opts.shift.0, opts.shift.1);
        let g = |mean| MechanismKind::Gaussian {
            intercept: mean,
            coefficients: vec![],
            sd,
        };
        m.insert(
            v.to_string(),
            DomainMechanisms {
                source: Mechanism::new(&[], g(shift)),
                target: Mechanism::new(&[], g(0.0)),
            },
        );
    }
    let target_x = Mechanism::new(
        &["Z"],
        MechanismKind::Logistic {
            coefficients: vec![b(&mut r), c(&mut r)],
        },
    );
    let source_x = Mechanism::new(
        &["Z", "W"],
        MechanismKind::Logistic {
            coefficients: vec![b(&mut r), c(&mut r), c(&mut r)],
        },
    );
    m.insert(
        "X".into(),
        DomainMechanisms {
            source: source_x,
            target: target_x,
        },
    );
    let y = Mechanism::new(
        &["Z", "W", "X"],
        MechanismKind::Logistic {
            coefficients: vec![b(&mut r), c(&mut r), c(&mut r), b(&mut r)],
        },
    );
    m.insert("Y".into(), DomainMechanisms::shared(y));
    ScmSpec::new("scenario1", fixtures::fig1c(), m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario2Options {
    pub alpha: f64,
}

impl Default for Scenario2Options {
    fn default() -> Self {
        Scenario2Options { alpha: 0.99 }
    }
}

/// Mixed Scenario 2 on `fig2d`. Thresholded rules fall back to `1 - α` for
/// X and Z, and to a logistic in W (intercept −1, slope 3) for Y.
pub fn build_scenario2(opts: &Scenario2Options) -> Result<ScmSpec> {
    let a = opts.alpha;
    if !(a > 0.0 && a < 1.0) {
        return Err(input("alpha must lie in (0, 1)"));
    }
    let std_normal = || {
        DomainMechanisms::shared(Mechanism::new(
            &[],
            MechanismKind::Gaussian {
                intercept: 0.0,
                coefficients: vec![],
                sd: 1.0,
            },
        ))
    };
    let above = |p: &str| Condition {
        parent: p.into(),
        above: 0.5,
    };
    let mut m = BTreeMap::new();
    for v in ["H1", "H2", "W"] {
        m.insert(v.to_string(), std_normal());
    }
    m.insert(
        "X".into(),
        DomainMechanisms::shared(Mechanism::new(
            &["H2"],
            MechanismKind::ThresholdBernoulli {
                conditions: vec![above("H2")],
                p: a,
                otherwise: Box::new(MechanismKind::Logistic {
                    coefficients: vec![logit(1.0 - a), 0.0],
                }),
            },
        )),
    );
    m.insert(
        "Y".into(),
        DomainMechanisms::shared(Mechanism::new(
            &["X", "H1", "W"],
            MechanismKind::ThresholdBernoulli {
                conditions: vec![above("X"), above("H1")],
                p: a,
                otherwise: Box::new(MechanismKind::Logistic {
                    coefficients: vec![-1.0, 0.0, 0.0, 3.0],
                }),
            },
        )),
    );
    let z = |p: f64| {
        Mechanism::new(
            &["H1", "H2"],
            MechanismKind::ThresholdBernoulli {
                conditions: vec![above("H1"), above("H2")],
                p,
                otherwise: Box::new(MechanismKind::Logistic {
                    coefficients: vec![logit(1.0 - a), 0.0, 0.0],
                }),
            },
        )
    };
    m.insert(
        "Z".into(),
        DomainMechanisms {
            source: z(1.0 - a),
            target: z(a),
        },
    );
    ScmSpec::new("scenario2", fixtures::fig2d(), m)
}

fn logistic(parents: &[&str], coefficients: Vec<f64>) -> Mechanism {
    Mechanism::new(parents, MechanismKind::Logistic { coefficients })
}

fn coin(p: f64) -> Mechanism {
    Mechanism::new(&[], MechanismKind::bernoulli(p))
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// All-binary Scenario 1 on `fig1c`. Z and W have marginals `σ(a)` in the
/// target and `σ(-a)` in the source; X and Y are logistic CPTs with random
/// coefficients.
pub fn discrete_scenario1(seed: u64) -> Result<ScmSpec> {
    let mut r = rng(derive_seed(seed, &[tag("discrete1")]));
    let mut m = BTreeMap::new();
    for v in ["Z", "W"] {
        let a = signed_uniform(&mut r, 1.0, 2.0);
        m.insert(
            v.to_string(),
            DomainMechanisms {
                source: coin(sigmoid(-a)),
                target: coin(sigmoid(a)),
            },
        );
    }
    let mut b = |lo: f64, hi: f64| signed_uniform(&mut r, lo, hi);
    let target_x = logistic(&["Z"], vec![b(0.5, 1.5), b(1.0, 2.5)]);
    let source_x = logistic(&["Z", "W"], vec![b(0.5, 1.5), b(1.0, 2.5), b(1.0, 2.5)]);
    m.insert(
        "X".into(),
        DomainMechanisms {
            source: source_x,
            target: target_x,
        },
    );
    let y = logistic(
        &["Z", "W", "X"],
        vec![b(0.5, 1.5), b(1.5, 3.0), b(1.5, 3.0), b(1.0, 2.5)],
    );
    m.insert("Y".into(), DomainMechanisms::shared(y));
    ScmSpec::new("scenario1-discrete", fixtures::fig1c(), m)
}

/// All-binary Scenario 2 on `fig2d`: binary latents, Z a noisy-OR of the
/// latents with strong weights in the target and weak ones in the source.
pub fn discrete_scenario2(seed: u64) -> Result<ScmSpec> {
    let mut r = rng(derive_seed(seed, &[tag("discrete2")]));
    let mut m = BTreeMap::new();
    for v in ["H1", "H2", "W"] {
        let p = r.random_range(0.3..=0.7);
        m.insert(v.to_string(), DomainMechanisms::shared(coin(p)));
    }
    let weights = |r: &mut ChaCha8Rng, lo: f64, hi: f64| {
        vec![r.random_range(lo..=hi), r.random_range(lo..=hi)]
    };
    let noisy_or = |w| {
        Mechanism::new(
            &["H1", "H2"],
            MechanismKind::NoisyOr {
                leak: 0.05,
                weights: w,
            },
        )
    };
    let target_z = noisy_or(weights(&mut r, 0.6, 0.95));
    let source_z = noisy_or(weights(&mut r, 0.05, 0.4));
    m.insert(
        "Z".into(),
        DomainMechanisms {
            source: source_z,
            target: target_z,
        },
    );
    let mut b = |lo: f64, hi: f64| signed_uniform(&mut r, lo, hi);
    m.insert(
        "X".into(),
        DomainMechanisms::shared(logistic(&["H2"], vec![b(0.5, 1.5), b(2.0, 3.5)])),
    );
    m.insert(
        "Y".into(),
        DomainMechanisms::shared(logistic(
            &["X", "H1", "W"],
            vec![b(0.5, 1.5), b(1.0, 2.5), b(2.0, 3.5), b(1.0, 2.5)],
        )),
    );
    ScmSpec::new("scenario2-discrete", fixtures::fig2d(), m)
}

/// Both all-discrete scenarios for one seed.
pub fn discretize_scenarios(seed: u64) -> Result<(ScmSpec, ScmSpec)> {
    Ok((discrete_scenario1(seed)?, discrete_scenario2(seed)?))
}

/// Adds an observed, isolated covariate `name` with `card` levels and a
/// random domain-invariant marginal. It is independent of everything else,
/// so it never changes the backdoor or s-admissibility status of a set.
pub fn with_noise_covariate(spec: &ScmSpec, name: &str, card: u32, seed: u64) -> Result<ScmSpec> {
    if card < 2 {
        return Err(input("noise covariate needs at least two levels"));
    }
    let d = spec.diagram();
    let mut b = SelectionDiagram::builder();
    for v in d.nodes() {
        b = b.node(d.name(v), d.kind(v));
    }
    b = b.observed(name);
    for e in d.edges() {
        b = b.edge_in(d.name(e.parent), d.name(e.child), e.domain);
    }
    let diagram = b
        .treatment(spec.treatment())
        .outcome(spec.outcome())
        .build()?;
    let mut r = rng(derive_seed(seed, &[tag("noise")]));
    let raw: Vec<f64> = (0..card).map(|_| r.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let mut row: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = row[..row.len() - 1].iter().sum();
    *row.last_mut().unwrap() = 1.0 - head;
    let mut m = spec.mechanisms().clone();
    m.insert(
        name.to_string(),
        DomainMechanisms::shared(Mechanism::new(
            &[],
            MechanismKind::MultinomialCpt {
                card,
                rows: vec![row],
            },
        )),
    );
    ScmSpec::new(&format!("{}+{name}", spec.name()), diagram, m)
}

/// Named experiment scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "1")]
    Mixed1,
    #[serde(rename = "2")]
    Mixed2,
    #[serde(rename = "1-discrete")]
    Discrete1,
    #[serde(rename = "2-discrete")]
    Discrete2,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Mixed1,
        Scenario::Mixed2,
        Scenario::Discrete1,
        Scenario::Discrete2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Mixed1 => "1",
            Scenario::Mixed2 => "2",
            Scenario::Discrete1 => "1-discrete",
            Scenario::Discrete2 => "2-discrete",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, Scenario::Discrete1 | Scenario::Discrete2)
    }

    /// Spec for one simulation; scenario 1 redraws its coefficients per seed,
    /// mixed scenario 2 is fixed.
    pub fn build(self, seed: u64) -> Result<ScmSpec> {
        match self {
            Scenario::Mixed1 => build_scenario1(seed, &Scenario1Options::default()),
            Scenario::Mixed2 => build_scenario2(&Scenario2Options::default()),
            Scenario::Discrete1 => discrete_scenario1(seed),
            Scenario::Discrete2 => discrete_scenario2(seed),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| {
                input(format!(
                    "unknown scenario `{s}` (expected 1, 2, 1-discrete or 2-discrete)"
                ))
            })
    }
}
