//! Selection diagrams and exact graphical oracles.
//!
//! A [`SelectionDiagram`] is a DAG over observed, latent and selection nodes
//! describing a source and a target domain at once. Edges carry a domain flag
//! so that structural differences between the two domain graphs can be
//! encoded; the backdoor test reads the target-domain edges, the s-admissibility
//! test reads the union.
//!
//! All queries are read-only; a diagram is immutable once built.

mod criteria;
mod dsep;
pub mod fixtures;
mod text;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use criteria::{
    canonical_subsets, enumerate_sabs, is_backdoor_set, is_s_admissible, is_sabs, MAX_ENUMERATION,
};
pub use dsep::d_separated;

/// Index of a node inside one diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Observed,
    Latent,
    Selection,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Observed => "observed",
            NodeKind::Latent => "latent",
            NodeKind::Selection => "selection",
        }
    }
}

/// Domains in which an edge is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeDomain {
    Source,
    Target,
    #[default]
    Both,
}

impl EdgeDomain {
    pub fn in_source(self) -> bool {
        matches!(self, EdgeDomain::Source | EdgeDomain::Both)
    }

    pub fn in_target(self) -> bool {
        matches!(self, EdgeDomain::Target | EdgeDomain::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeDomain::Source => "source",
            EdgeDomain::Target => "target",
            EdgeDomain::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub parent: NodeId,
    pub child: NodeId,
    #[serde(default)]
    pub domain: EdgeDomain,
}

/// Plain parent/child adjacency of a DAG.
pub trait DirectedGraph {
    fn node_count(&self) -> usize;
    fn parents(&self, v: usize) -> &[usize];
    fn children(&self, v: usize) -> &[usize];
}

/// Adjacency lists for an acyclic edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds adjacency from `(parent, child)` pairs, rejecting cycles,
    /// self-loops and out-of-range indices. Duplicate pairs collapse.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in edges {
            if p >= n || c >= n {
                return Err(Error::Diagram(format!("edge {p} -> {c} out of range")));
            }
            if p == c {
                return Err(Error::Diagram(format!("self-loop on node {p}")));
            }
            if !children[p].contains(&c) {
                children[p].push(c);
                parents[c].push(p);
            }
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let dag = Dag { parents, children };
        if dag.topological_order().is_none() {
            return Err(Error::Diagram("edge set contains a directed cycle".into()));
        }
        Ok(dag)
    }

    /// Kahn ordering; `None` when a cycle exists. Ties resolve by index.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.parents.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n)
            .filter(|&v| indegree[v] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(std::cmp::Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(std::cmp::Reverse(c));
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn descendants(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.parents.len()];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            for &c in &self.children[u] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        seen
    }
}

impl DirectedGraph for Dag {
    fn node_count(&self) -> usize {
        self.parents.len()
    }

    fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }
}

/// Edge-removal mode of a [`ManipulatedView`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manipulation {
    /// Keep every edge.
    None,
    /// Drop edges pointing into the manipulated node (the post-intervention graph).
    RemoveInto(NodeId),
    /// Drop edges leaving the manipulated node.
    RemoveOutOf(NodeId),
}

/// Which slice of the diagram a view starts from before manipulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slice {
    /// Every node and every edge of either domain.
    Full,
    /// Target-domain causal graph: selection nodes isolated, source-only edges dropped.
    Target,
    /// Source-domain causal graph: selection nodes isolated, target-only edges dropped.
    Source,
}

/// A derived edge set over the same node indices as its base diagram.
#[derive(Debug, Clone)]
pub struct ManipulatedView {
    pub slice: Slice,
    pub mode: Manipulation,
    edges: Vec<(usize, usize)>,
    dag: Dag,
}

impl ManipulatedView {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl DirectedGraph for ManipulatedView {
    fn node_count(&self) -> usize {
        self.dag.node_count()
    }

    fn parents(&self, v: usize) -> &[usize] {
        self.dag.parents(v)
    }

    fn children(&self, v: usize) -> &[usize] {
        self.dag.children(v)
    }
}

/// DAG over observed, latent and selection nodes spanning two domains.
#[derive(Debug, Clone)]
pub struct SelectionDiagram {
    names: Vec<String>,
    kinds: Vec<NodeKind>,
    edges: Vec<Edge>,
    treatment: NodeId,
    outcome: NodeId,
    index: HashMap<String, NodeId>,
    dag: Dag,
}

impl SelectionDiagram {
    pub fn builder() -> DiagramBuilder {
        DiagramBuilder::default()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.0]
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[id.0]
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<NodeId> {
        self.node(name)
            .ok_or_else(|| Error::Input(format!("unknown node `{name}`")))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len()).map(NodeId)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes().filter(|&v| self.kind(v) == kind).collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn treatment(&self) -> NodeId {
        self.treatment
    }

    pub fn outcome(&self) -> NodeId {
        self.outcome
    }

    /// Parents of `v` that are not selection nodes, in index order.
    pub fn causal_parents(&self, v: NodeId) -> Vec<NodeId> {
        self.dag
            .parents(v.0)
            .iter()
            .map(|&p| NodeId(p))
            .filter(|&p| self.kind(p) != NodeKind::Selection)
            .collect()
    }

    pub fn selection_parents(&self, v: NodeId) -> Vec<NodeId> {
        self.dag
            .parents(v.0)
            .iter()
            .map(|&p| NodeId(p))
            .filter(|&p| self.kind(p) == NodeKind::Selection)
            .collect()
    }

    pub fn has_selection_parent(&self, v: NodeId) -> bool {
        !self.selection_parents(v).is_empty()
    }

    /// Node indices in a topological order of the full diagram.
    pub fn topological_order(&self) -> Vec<NodeId> {
        self.dag
            .topological_order()
            .expect("validated acyclic at construction")
            .into_iter()
            .map(NodeId)
            .collect()
    }

    /// Descendants of `v` (including `v`) in the union of both domain graphs.
    pub fn descendants(&self, v: NodeId) -> Vec<NodeId> {
        self.dag
            .descendants(v.0)
            .into_iter()
            .enumerate()
            .filter_map(|(i, d)| d.then_some(NodeId(i)))
            .collect()
    }

    pub fn view(&self, slice: Slice, mode: Manipulation) -> ManipulatedView {
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|e| match slice {
                Slice::Full => true,
                Slice::Target => e.domain.in_target() && self.kind(e.parent) != NodeKind::Selection,
                Slice::Source => e.domain.in_source() && self.kind(e.parent) != NodeKind::Selection,
            })
            .filter(|e| match mode {
                Manipulation::None => true,
                Manipulation::RemoveInto(x) => e.child != x,
                Manipulation::RemoveOutOf(x) => e.parent != x,
            })
            .map(|e| (e.parent.0, e.child.0))
            .collect();
        let dag = Dag::from_edges(self.node_count(), &edges)
            .expect("subgraph of an acyclic diagram is acyclic");
        ManipulatedView {
            slice,
            mode,
            edges,
            dag,
        }
    }

    /// Parses the line-oriented diagram format (see [`SelectionDiagram::to_text`]).
    pub fn parse(src: &str) -> Result<Self> {
        text::parse(src)
    }

    /// Renders the diagram in the line-oriented text format.
    ///
    /// ```text
    /// # comment
    /// treatment = X
    /// outcome = Y
    /// X observed
    /// H latent
    /// S_W selection
    /// H -> X
    /// W -> X [domains=source]
    /// ```
    pub fn to_text(&self) -> String {
        text::render(self)
    }
}

impl DirectedGraph for SelectionDiagram {
    fn node_count(&self) -> usize {
        self.names.len()
    }

    fn parents(&self, v: usize) -> &[usize] {
        self.dag.parents(v)
    }

    fn children(&self, v: usize) -> &[usize] {
        self.dag.children(v)
    }
}

impl fmt::Display for SelectionDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl PartialEq for SelectionDiagram {
    fn eq(&self, other: &Self) -> bool {
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        let key = |e: &Edge| (e.parent, e.child);
        a.sort_by_key(key);
        b.sort_by_key(key);
        self.names == other.names
            && self.kinds == other.kinds
            && a == b
            && self.treatment == other.treatment
            && self.outcome == other.outcome
    }
}

/// Incremental construction of a [`SelectionDiagram`]; all invariants are
/// checked in [`DiagramBuilder::build`].
#[derive(Debug, Default, Clone)]
pub struct DiagramBuilder {
    nodes: Vec<(String, NodeKind)>,
    edges: Vec<(String, String, EdgeDomain)>,
    treatment: Option<String>,
    outcome: Option<String>,
}

impl DiagramBuilder {
    pub fn node(mut self, name: &str, kind: NodeKind) -> Self {
        self.nodes.push((name.to_string(), kind));
        self
    }

    pub fn observed(self, name: &str) -> Self {
        self.node(name, NodeKind::Observed)
    }

    pub fn latent(self, name: &str) -> Self {
        self.node(name, NodeKind::Latent)
    }

    pub fn selection(self, name: &str) -> Self {
        self.node(name, NodeKind::Selection)
    }

    pub fn edge(self, parent: &str, child: &str) -> Self {
        self.edge_in(parent, child, EdgeDomain::Both)
    }

    pub fn edge_in(mut self, parent: &str, child: &str, domain: EdgeDomain) -> Self {
        self.edges
            .push((parent.to_string(), child.to_string(), domain));
        self
    }

    pub fn treatment(mut self, name: &str) -> Self {
        self.treatment = Some(name.to_string());
        self
    }

    pub fn outcome(mut self, name: &str) -> Self {
        self.outcome = Some(name.to_string());
        self
    }

    pub fn build(self) -> Result<SelectionDiagram> {
        let mut index = HashMap::new();
        let mut names = Vec::with_capacity(self.nodes.len());
        let mut kinds = Vec::with_capacity(self.nodes.len());
        for (name, kind) in self.nodes {
            if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',') {
                return Err(Error::Diagram(format!("invalid node name `{name}`")));
            }
            if index.insert(name.clone(), NodeId(names.len())).is_some() {
                return Err(Error::Diagram(format!("duplicate node `{name}`")));
            }
            names.push(name);
            kinds.push(kind);
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Diagram(format!("unknown node `{name}`")))
        };

        let mut edges = Vec::with_capacity(self.edges.len());
        for (p, c, domain) in &self.edges {
            let (p, c) = (lookup(p)?, lookup(c)?);
            if kinds[c.0] == NodeKind::Selection {
                return Err(Error::Diagram(format!(
                    "selection node `{}` cannot have parents",
                    names[c.0]
                )));
            }
            if kinds[p.0] == NodeKind::Selection && *domain != EdgeDomain::Both {
                return Err(Error::Diagram(format!(
                    "selection edge {} -> {} must be present in both domains",
                    names[p.0], names[c.0]
                )));
            }
            if edges.iter().any(|e: &Edge| e.parent == p && e.child == c) {
                return Err(Error::Diagram(format!(
                    "duplicate edge {} -> {}",
                    names[p.0], names[c.0]
                )));
            }
            edges.push(Edge {
                parent: p,
                child: c,
                domain: *domain,
            });
        }

        let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e.parent.0, e.child.0)).collect();
        let dag = Dag::from_edges(names.len(), &pairs)?;

        // A mechanism whose parent set differs between domains must be marked
        // as differing by a selection parent.
        for e in &edges {
            if e.domain != EdgeDomain::Both {
                let has_selection = dag
                    .parents(e.child.0)
                    .iter()
                    .any(|&p| kinds[p] == NodeKind::Selection);
                if !has_selection {
                    return Err(Error::Diagram(format!(
                        "edge {} -> {} is domain-specific but `{}` has no selection parent",
                        names[e.parent.0], names[e.child.0], names[e.child.0]
                    )));
                }
            }
        }

        let role = |label: &str, name: Option<String>| -> Result<NodeId> {
            let name = name.ok_or_else(|| Error::Diagram(format!("missing {label}")))?;
            let id = lookup(&name)?;
            if kinds[id.0] != NodeKind::Observed {
                return Err(Error::Diagram(format!("{label} `{name}` must be observed")));
            }
            Ok(id)
        };
        let treatment = role("treatment", self.treatment)?;
        let outcome = role("outcome", self.outcome)?;
        if treatment == outcome {
            return Err(Error::Diagram("treatment and outcome coincide".into()));
        }

        Ok(SelectionDiagram {
            names,
            kinds,
            edges,
            treatment,
            outcome,
            index,
            dag,
        })
    }
}
