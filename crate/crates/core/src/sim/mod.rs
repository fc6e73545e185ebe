//! Structural causal models over a selection diagram and their simulation
//! in either domain, observationally or under a randomized treatment.

pub mod rng;
mod scenarios;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Domain, Regime, VarType};
use crate::error::{input, Error, Result};
use crate::graph::{NodeId, NodeKind, SelectionDiagram};

pub use scenarios::{
    build_scenario1, build_scenario2, discrete_scenario1, discrete_scenario2, discretize_scenarios,
    with_noise_covariate, Scenario, Scenario1Options, Scenario2Options,
};

const ROW_TOL: f64 = 1e-12;

/// `parent > above` must hold for a [`MechanismKind::ThresholdBernoulli`] rule to fire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub parent: String,
    pub above: f64,
}

/// Generating function of one variable given its parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MechanismKind {
    /// Conditional probability table. Row `j` is the distribution for the
    /// parent configuration with mixed-radix index `j`, first parent least
    /// significant. All parents must be discrete.
    MultinomialCpt { card: u32, rows: Vec<Vec<f64>> },
    /// Binary variable with `P(V=1) = σ(c0 + Σ c_i pa_i)`.
    Logistic { coefficients: Vec<f64> },
    /// Binary variable with `P(V=1) = 1 - (1-leak) Π (1-w_i)^[pa_i > 0.5]`.
    NoisyOr { leak: f64, weights: Vec<f64> },
    /// Continuous variable `c0 + Σ c_i pa_i + sd·ε`, ε standard normal.
    Gaussian {
        intercept: f64,
        coefficients: Vec<f64>,
        sd: f64,
    },
    /// Binary variable equal to one with probability `p` when every
    /// condition holds, otherwise distributed as `otherwise`.
    ThresholdBernoulli {
        conditions: Vec<Condition>,
        p: f64,
        otherwise: Box<MechanismKind>,
    },
}

impl MechanismKind {
    pub fn bernoulli(p: f64) -> Self {
        MechanismKind::MultinomialCpt {
            card: 2,
            rows: vec![vec![1.0 - p, p]],
        }
    }

    fn output_type(&self) -> VarType {
        match self {
            MechanismKind::MultinomialCpt { card, .. } => VarType::Discrete { card: *card },
            MechanismKind::Gaussian { .. } => VarType::Continuous,
            _ => VarType::binary(),
        }
    }

    fn validate(&self, parents: &[String], parent_types: &[VarType]) -> Result<()> {
        let k = parents.len();
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Spec(format!("{what} {p} is not a probability")))
            }
        };
        match self {
            MechanismKind::MultinomialCpt { card, rows } => {
                if *card == 0 {
                    return Err(Error::Spec("CPT cardinality must be positive".into()));
                }
                let mut expected = 1usize;
                for (name, ty) in parents.iter().zip(parent_types) {
                    let c = ty
                        .card()
                        .ok_or_else(|| Error::Spec(format!("CPT parent `{name}` is continuous")))?;
                    expected *= c as usize;
                }
                if rows.len() != expected {
                    return Err(Error::Spec(format!(
                        "CPT has {} rows, parent configurations need {expected}",
                        rows.len()
                    )));
                }
                for row in rows {
                    if row.len() != *card as usize {
                        return Err(Error::Spec(
                            "CPT row length differs from cardinality".into(),
                        ));
                    }
                    for &p in row {
                        prob(p, "CPT entry")?;
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > ROW_TOL {
                        return Err(Error::Spec(format!("CPT row sums to {s}")));
                    }
                }
            }
            MechanismKind::Logistic { coefficients } => {
                if coefficients.len() != k + 1 {
                    return Err(Error::Spec(format!(
                        "logistic needs {} coefficients, got {}",
                        k + 1,
                        coefficients.len()
                    )));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Spec("non-finite logistic coefficient".into()));
                }
            }
            MechanismKind::NoisyOr { leak, weights } => {
                prob(*leak, "noisy-OR leak")?;
                if weights.len() != k {
                    return Err(Error::Spec("noisy-OR needs one weight per parent".into()));
                }
                for &w in weights {
                    prob(w, "noisy-OR weight")?;
                }
            }
            MechanismKind::Gaussian {
                intercept,
                coefficients,
                sd,
            } => {
                if coefficients.len() != k {
                    return Err(Error::Spec(
                        "gaussian needs one coefficient per parent".into(),
                    ));
                }
                if !(*sd > 0.0 && sd.is_finite()) || !intercept.is_finite() {
                    return Err(Error::Spec(
                        "gaussian sd must be positive and finite".into(),
                    ));
                }
            }
            MechanismKind::ThresholdBernoulli {
                conditions,
                p,
                otherwise,
            } => {
                prob(*p, "threshold probability")?;
                for c in conditions {
                    if !parents.contains(&c.parent) {
                        return Err(Error::Spec(format!(
                            "threshold condition on non-parent `{}`",
                            c.parent
                        )));
                    }
                }
                if otherwise.output_type() != VarType::binary() {
                    return Err(Error::Spec("threshold fallback must be binary".into()));
                }
                otherwise.validate(parents, parent_types)?;
            }
        }
        Ok(())
    }
}

/// A mechanism together with the parents it reads, in argument order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub parents: Vec<String>,
    #[serde(flatten)]
    pub kind: MechanismKind,
}

impl Mechanism {
    pub fn new(parents: &[&str], kind: MechanismKind) -> Self {
        Mechanism {
            parents: parents.iter().map(|s| s.to_string()).collect(),
            kind,
        }
    }
}

/// Mechanisms of one variable in the source and the target domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMechanisms {
    pub source: Mechanism,
    pub target: Mechanism,
}

impl DomainMechanisms {
    pub fn shared(m: Mechanism) -> Self {
        DomainMechanisms {
            source: m.clone(),
            target: m,
        }
    }

    pub fn get(&self, domain: Domain) -> &Mechanism {
        match domain {
            Domain::Source => &self.source,
            Domain::Target => &self.target,
        }
    }
}

mod diagram_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::graph::SelectionDiagram;

    pub fn serialize<S: Serializer>(d: &SelectionDiagram, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&d.to_text())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SelectionDiagram, D::Error> {
        let text = String::deserialize(d)?;
        SelectionDiagram::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawSpec {
    name: String,
    #[serde(with = "diagram_text")]
    diagram: SelectionDiagram,
    mechanisms: BTreeMap<String, DomainMechanisms>,
}

/// A selection diagram with one mechanism per non-selection node and domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ScmSpec {
    name: String,
    diagram: SelectionDiagram,
    mechanisms: BTreeMap<String, DomainMechanisms>,
    types: Vec<Option<VarType>>,
}

impl TryFrom<RawSpec> for ScmSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        ScmSpec::new(&raw.name, raw.diagram, raw.mechanisms)
    }
}

impl From<ScmSpec> for RawSpec {
    fn from(s: ScmSpec) -> Self {
        RawSpec {
            name: s.name,
            diagram: s.diagram,
            mechanisms: s.mechanisms,
        }
    }
}

impl ScmSpec {
    pub fn new(
        name: &str,
        diagram: SelectionDiagram,
        mechanisms: BTreeMap<String, DomainMechanisms>,
    ) -> Result<Self> {
        for key in mechanisms.keys() {
            let v = diagram
                .node(key)
                .ok_or_else(|| Error::Spec(format!("mechanism for unknown node `{key}`")))?;
            if diagram.kind(v) == NodeKind::Selection {
                return Err(Error::Spec(format!(
                    "selection node `{key}` has a mechanism"
                )));
            }
        }
        let mut types: Vec<Option<VarType>> = vec![None; diagram.node_count()];
        for v in diagram.topological_order() {
            if diagram.kind(v) == NodeKind::Selection {
                continue;
            }
            let name = diagram.name(v);
            let dm = mechanisms
                .get(name)
                .ok_or_else(|| Error::Spec(format!("node `{name}` has no mechanism")))?;
            if dm.source != dm.target && !diagram.has_selection_parent(v) {
                return Err(Error::Spec(format!(
                    "`{name}` has no selection parent but its mechanisms differ across domains"
                )));
            }
            let mut ty = None;
            for domain in [Domain::Source, Domain::Target] {
                let m = dm.get(domain);
                let mut parent_types = Vec::with_capacity(m.parents.len());
                for p in &m.parents {
                    let pid = diagram
                        .node(p)
                        .ok_or_else(|| Error::Spec(format!("unknown parent `{p}` of `{name}`")))?;
                    let present = diagram.edges().iter().any(|e| {
                        e.parent == pid
                            && e.child == v
                            && match domain {
                                Domain::Source => e.domain.in_source(),
                                Domain::Target => e.domain.in_target(),
                            }
                    });
                    if !present || diagram.kind(pid) == NodeKind::Selection {
                        return Err(Error::Spec(format!(
                            "`{name}` reads `{p}` without a {} edge {p} -> {name}",
                            domain.as_str()
                        )));
                    }
                    if m.parents.iter().filter(|q| *q == p).count() > 1 {
                        return Err(Error::Spec(format!("`{name}` lists parent `{p}` twice")));
                    }
                    parent_types.push(types[pid.0].expect("parents precede children"));
                }
                m.kind
                    .validate(&m.parents, &parent_types)
                    .map_err(|e| Error::Spec(format!("`{name}` ({}): {e}", domain.as_str())))?;
                let out = m.kind.output_type();
                if ty.is_some_and(|t| t != out) {
                    return Err(Error::Spec(format!(
                        "`{name}` changes type between domains"
                    )));
                }
                ty = Some(out);
            }
            types[v.0] = ty;
        }
        Ok(ScmSpec {
            name: name.to_string(),
            diagram,
            mechanisms,
            types,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn diagram(&self) -> &SelectionDiagram {
        &self.diagram
    }

    pub fn mechanisms(&self) -> &BTreeMap<String, DomainMechanisms> {
        &self.mechanisms
    }

    pub fn mechanism(&self, name: &str, domain: Domain) -> Option<&Mechanism> {
        self.mechanisms.get(name).map(|m| m.get(domain))
    }

    pub fn var_type(&self, v: NodeId) -> Option<VarType> {
        self.types[v.0]
    }

    /// Observed nodes, in diagram order; these are the emitted columns.
    pub fn observed(&self) -> Vec<String> {
        self.diagram
            .nodes_of_kind(NodeKind::Observed)
            .into_iter()
            .map(|v| self.diagram.name(v).to_string())
            .collect()
    }

    /// Observed pre-treatment covariates (observed, neither treatment nor outcome
    /// nor a descendant of the treatment).
    pub fn covariates(&self) -> Vec<String> {
        let d = &self.diagram;
        let desc = d.descendants(d.treatment());
        d.nodes_of_kind(NodeKind::Observed)
            .into_iter()
            .filter(|v| *v != d.outcome() && !desc.contains(v))
            .map(|v| d.name(v).to_string())
            .collect()
    }

    pub fn treatment(&self) -> &str {
        self.diagram.name(self.diagram.treatment())
    }

    pub fn outcome(&self) -> &str {
        self.diagram.name(self.diagram.outcome())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Regime requested from [`sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    Observational,
    /// The treatment is drawn uniformly over its support, ignoring its mechanism.
    Experimental,
}

struct Compiled<'a> {
    parents: Vec<usize>,
    parent_cards: Vec<u32>,
    kind: &'a MechanismKind,
    thresholds: Vec<(usize, f64)>,
}

fn compile<'a>(spec: &'a ScmSpec, m: &'a Mechanism) -> Compiled<'a> {
    let d = &spec.diagram;
    let parents: Vec<usize> = m
        .parents
        .iter()
        .map(|p| d.node(p).expect("validated").0)
        .collect();
    let parent_cards = parents
        .iter()
        .map(|&p| spec.types[p].and_then(VarType::card).unwrap_or(0))
        .collect();
    let thresholds = match &m.kind {
        MechanismKind::ThresholdBernoulli { conditions, .. } => conditions
            .iter()
            .map(|c| {
                let pos = m
                    .parents
                    .iter()
                    .position(|p| *p == c.parent)
                    .expect("validated");
                (pos, c.above)
            })
            .collect(),
        _ => Vec::new(),
    };
    Compiled {
        parents,
        parent_cards,
        kind: &m.kind,
        thresholds,
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Compiled<'_> {
    fn cpt_row(&self, pa: &[f64]) -> Result<usize> {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for (&v, &card) in pa.iter().zip(&self.parent_cards) {
            if v.fract() != 0.0 || v < 0.0 || v >= card as f64 {
                return Err(Error::Simulation(format!(
                    "parent value {v} is not a state of a {card}-level variable"
                )));
            }
            idx += v as usize * stride;
            stride *= card as usize;
        }
        Ok(idx)
    }

    /// P(V = 1 | pa) for binary mechanisms.
    fn prob_one(&self, kind: &MechanismKind, pa: &[f64]) -> Result<f64> {
        Ok(match kind {
            MechanismKind::Logistic { coefficients } => {
                let eta = coefficients[0]
                    + coefficients[1..]
                        .iter()
                        .zip(pa)
                        .map(|(c, v)| c * v)
                        .sum::<f64>();
                sigmoid(eta)
            }
            MechanismKind::NoisyOr { leak, weights } => {
                let off = weights
                    .iter()
                    .zip(pa)
                    .filter(|(_, v)| **v > 0.5)
                    .fold(1.0 - leak, |acc, (w, _)| acc * (1.0 - w));
                1.0 - off
            }
            MechanismKind::ThresholdBernoulli { p, otherwise, .. } => {
                if self.thresholds.iter().all(|&(i, t)| pa[i] > t) {
                    *p
                } else {
                    self.prob_one(otherwise, pa)?
                }
            }
            MechanismKind::MultinomialCpt { rows, .. } => rows[self.cpt_row(pa)?][1],
            MechanismKind::Gaussian { .. } => unreachable!("validated binary"),
        })
    }

    fn draw<R: Rng>(&self, pa: &[f64], rng: &mut R) -> Result<f64> {
        match self.kind {
            MechanismKind::Gaussian {
                intercept,
                coefficients,
                sd,
            } => {
                let e: f64 = rng.sample(StandardNormal);
                let mean = intercept + coefficients.iter().zip(pa).map(|(c, v)| c * v).sum::<f64>();
                Ok(mean + sd * e)
            }
            MechanismKind::MultinomialCpt { rows, .. } => {
                let u: f64 = rng.random();
                let row = &rows[self.cpt_row(pa)?];
                let mut acc = 0.0;
                for (k, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Ok(k as f64);
                    }
                }
                // u landed in the rounding slack above the row sum
                Ok(row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as f64)
            }
            kind => {
                let u: f64 = rng.random();
                Ok(if u < self.prob_one(kind, pa)? {
                    1.0
                } else {
                    0.0
                })
            }
        }
    }
}

/// Draws `n` rows of every non-selection node (latents included).
pub fn sample_full(
    spec: &ScmSpec,
    domain: Domain,
    regime: RegimeKind,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(input("sample size must be at least 1"));
    }
    let d = &spec.diagram;
    let x = d.treatment();
    let mut values: Vec<Option<Vec<f64>>> = vec![None; d.node_count()];
    for v in d.topological_order() {
        if d.kind(v) == NodeKind::Selection {
            continue;
        }
        let mut rng = rng::stream_rng(seed, v.0 as u64);
        let col = if v == x && regime == RegimeKind::Experimental {
            let card = spec.types[v.0]
                .and_then(VarType::card)
                .ok_or_else(|| Error::Simulation("randomized treatment must be discrete".into()))?
                as f64;
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    (u * card).floor().min(card - 1.0)
                })
                .collect()
        } else {
            let m = compile(spec, spec.mechanisms[d.name(v)].get(domain));
            let parent_cols: Vec<&Vec<f64>> = m
                .parents
                .iter()
                .map(|&p| values[p].as_ref().expect("topological order"))
                .collect();
            let mut pa = vec![0.0; parent_cols.len()];
            let mut col = Vec::with_capacity(n);
            for i in 0..n {
                for (slot, c) in pa.iter_mut().zip(&parent_cols) {
                    *slot = c[i];
                }
                col.push(m.draw(&pa, &mut rng)?);
            }
            col
        };
        values[v.0] = Some(col);
    }

    let mut names = Vec::new();
    let mut types = Vec::new();
    let mut columns = Vec::new();
    for v in d.nodes() {
        if let Some(col) = values[v.0].take() {
            names.push(d.name(v).to_string());
            types.push(spec.types[v.0].expect("typed"));
            columns.push(col);
        }
    }
    let regime = match regime {
        RegimeKind::Observational => Regime::Observational,
        RegimeKind::Experimental => Regime::Experimental {
            treatment: d.name(x).to_string(),
        },
    };
    Ok(Dataset::new(names, types, columns, domain, regime)?.with_seed(seed))
}

/// Draws `n` i.i.d. rows in the requested domain and regime; only observed
/// columns are returned.
pub fn sample(
    spec: &ScmSpec,
    domain: Domain,
    regime: RegimeKind,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    let full = sample_full(spec, domain, regime, n, seed)?;
    let observed = spec.observed();
    let names: Vec<&str> = observed.iter().map(String::as_str).collect();
    full.project(&names)
}

/// Exact `P(V = 1 | parents)` of a binary mechanism, for checks against
/// sampled frequencies.
pub fn binary_probability(spec: &ScmSpec, node: &str, domain: Domain, pa: &[f64]) -> Result<f64> {
    let m = spec
        .mechanism(node, domain)
        .ok_or_else(|| input(format!("unknown node `{node}`")))?;
    if m.kind.output_type() != VarType::binary() || pa.len() != m.parents.len() {
        return Err(input(format!(
            "`{node}` is not binary or parent count differs"
        )));
    }
    let c = compile(spec, m);
    c.prob_one(c.kind, pa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    fn degenerate_spec() -> ScmSpec {
        let d = SelectionDiagram::builder()
            .observed("Z")
            .observed("X")
            .observed("Y")
            .edge("Z", "X")
            .edge("X", "Y")
            .treatment("X")
            .outcome("Y")
            .build()
            .unwrap();
        let mut m = BTreeMap::new();
        m.insert(
            "Z".into(),
            DomainMechanisms::shared(Mechanism::new(&[], MechanismKind::bernoulli(1.0))),
        );
        m.insert(
            "X".into(),
            DomainMechanisms::shared(Mechanism::new(
                &["Z"],
                MechanismKind::MultinomialCpt {
                    card: 2,
                    rows: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                },
            )),
        );
        m.insert(
            "Y".into(),
            DomainMechanisms::shared(Mechanism::new(
                &["X"],
                MechanismKind::MultinomialCpt {
                    card: 3,
                    rows: vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
                },
            )),
        );
        ScmSpec::new("degenerate", d, m).unwrap()
    }

    #[test]
    fn deterministic_mechanisms_repeat_the_unique_row() {
        let spec = degenerate_spec();
        for seed in [0, 1, 99] {
            let d = sample(&spec, Domain::Target, RegimeKind::Observational, 25, seed).unwrap();
            for i in 0..d.n() {
                assert_eq!(d.row(i), vec![1.0, 0.0, 2.0]);
            }
        }
    }

    #[test]
    fn rejects_bad_cpt_rows_and_lengths() {
        let d = degenerate_spec().diagram().clone();
        let mut m = degenerate_spec().mechanisms().clone();
        m.insert(
            "Z".into(),
            DomainMechanisms::shared(Mechanism::new(
                &[],
                MechanismKind::MultinomialCpt {
                    card: 2,
                    rows: vec![vec![0.5, 0.6]],
                },
            )),
        );
        assert!(matches!(
            ScmSpec::new("bad", d.clone(), m.clone()),
            Err(Error::Spec(_))
        ));
        m.insert(
            "Z".into(),
            DomainMechanisms::shared(Mechanism::new(
                &[],
                MechanismKind::Logistic {
                    coefficients: vec![0.0, 1.0],
                },
            )),
        );
        assert!(matches!(ScmSpec::new("bad", d, m), Err(Error::Spec(_))));
    }

    #[test]
    fn differing_mechanisms_need_a_selection_parent() {
        let d = degenerate_spec().diagram().clone();
        let mut m = degenerate_spec().mechanisms().clone();
        m.insert(
            "Z".into(),
            DomainMechanisms {
                source: Mechanism::new(&[], MechanismKind::bernoulli(0.2)),
                target: Mechanism::new(&[], MechanismKind::bernoulli(0.8)),
            },
        );
        assert!(ScmSpec::new("bad", d, m).is_err());
    }

    #[test]
    fn target_mechanism_cannot_read_a_source_only_edge() {
        let spec = build_scenario1(1, &Scenario1Options::default()).unwrap();
        let mut m = spec.mechanisms().clone();
        let src = m["X"].source.clone();
        m.get_mut("X").unwrap().target = src;
        assert!(ScmSpec::new("bad", fixtures::fig1c(), m).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = build_scenario2(&Scenario2Options::default()).unwrap();
        let back = ScmSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn shared_mechanisms_draw_identically_in_both_domains() {
        let spec = build_scenario1(5, &Scenario1Options::default()).unwrap();
        let s = sample_full(&spec, Domain::Source, RegimeKind::Experimental, 200, 17).unwrap();
        let t = sample_full(&spec, Domain::Target, RegimeKind::Experimental, 200, 17).unwrap();
        // X is randomized in both and Y's mechanism is shared: wherever the
        // parents agree, Y must agree bit for bit.
        assert_eq!(s.column("X").unwrap(), t.column("X").unwrap());
        let (sz, tz) = (s.column("Z").unwrap(), t.column("Z").unwrap());
        assert!(sz.iter().zip(tz).all(|(a, b)| a != b));
        let spec2 = build_scenario2(&Scenario2Options::default()).unwrap();
        let s = sample_full(&spec2, Domain::Source, RegimeKind::Observational, 500, 3).unwrap();
        let t = sample_full(&spec2, Domain::Target, RegimeKind::Observational, 500, 3).unwrap();
        for v in ["H1", "H2", "W", "X", "Y"] {
            assert_eq!(s.column(v).unwrap(), t.column(v).unwrap(), "{v}");
        }
        assert_ne!(s.column("Z").unwrap(), t.column("Z").unwrap());
    }

    #[test]
    fn experimental_treatment_is_fair_coin() {
        let spec = build_scenario2(&Scenario2Options::default()).unwrap();
        let n = 20_000;
        let d = sample(&spec, Domain::Source, RegimeKind::Experimental, n, 8).unwrap();
        let ones: f64 = d.column("X").unwrap().iter().sum();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < 3.0 * sd, "{ones}");
        assert!(d.regime().is_experimental());
        assert_eq!(d.names(), &["W", "Z", "X", "Y"]);
    }

    #[test]
    fn zero_rows_is_an_input_error() {
        let spec = degenerate_spec();
        assert!(sample(&spec, Domain::Target, RegimeKind::Observational, 0, 1).is_err());
    }
}
