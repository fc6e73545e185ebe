//! Line-oriented diagram format.
//!
//! ```text
//! file    := { line "\n" }
//! line    := blank | comment | header | node | edge
//! comment := "#" any*
//! header  := ("treatment" | "outcome") "=" NAME
//! node    := NAME KIND            KIND := "observed" | "latent" | "selection"
//! edge    := NAME "->" NAME [ "[" "domains" "=" DOMAIN "]" ]
//! DOMAIN  := "source" | "target" | "both"     (default "both")
//! ```
//!
//! Whitespace around tokens is insignificant. Nodes may be declared after the
//! edges that mention them. Node names may not contain whitespace or commas.

use super::{DiagramBuilder, EdgeDomain, NodeKind, SelectionDiagram};
use crate::error::{Error, Result};

pub(super) fn parse(src: &str) -> Result<SelectionDiagram> {
    let mut builder = DiagramBuilder::default();
    let mut edges = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((lhs, rhs)) = line.split_once("->") {
            let parent = lhs.trim();
            let (child, domain) = match rhs.split_once('[') {
                Some((child, attrs)) => {
                    let attrs = attrs
                        .trim()
                        .strip_suffix(']')
                        .ok_or_else(|| err("unterminated `[`".into()))?;
                    let (key, value) = attrs
                        .split_once('=')
                        .ok_or_else(|| err(format!("malformed attribute `{attrs}`")))?;
                    if key.trim() != "domains" {
                        return Err(err(format!("unknown attribute `{}`", key.trim())));
                    }
                    let domain = match value.trim() {
                        "source" => EdgeDomain::Source,
                        "target" => EdgeDomain::Target,
                        "both" => EdgeDomain::Both,
                        other => return Err(err(format!("unknown domain `{other}`"))),
                    };
                    (child.trim(), domain)
                }
                None => (rhs.trim(), EdgeDomain::Both),
            };
            if parent.is_empty() || child.is_empty() || child.contains(char::is_whitespace) {
                return Err(err(format!("malformed edge `{line}`")));
            }
            edges.push((parent.to_string(), child.to_string(), domain));
        } else if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            builder = match key.trim() {
                "treatment" => builder.treatment(value),
                "outcome" => builder.outcome(value),
                other => return Err(err(format!("unknown header `{other}`"))),
            };
        } else {
            let mut parts = line.split_whitespace();
            let (Some(name), Some(kind), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err(format!("expected `name kind`, got `{line}`")));
            };
            let kind = match kind {
                "observed" => NodeKind::Observed,
                "latent" => NodeKind::Latent,
                "selection" => NodeKind::Selection,
                other => return Err(err(format!("unknown node kind `{other}`"))),
            };
            builder = builder.node(name, kind);
        }
    }
    for (p, c, d) in edges {
        builder = builder.edge_in(&p, &c, d);
    }
    builder.build()
}

pub(super) fn render(d: &SelectionDiagram) -> String {
    let mut out = String::new();
    out.push_str(&format!("treatment = {}\n", d.name(d.treatment())));
    out.push_str(&format!("outcome = {}\n", d.name(d.outcome())));
    for v in d.nodes() {
        out.push_str(&format!("{} {}\n", d.name(v), d.kind(v).as_str()));
    }
    for e in d.edges() {
        out.push_str(&format!("{} -> {}", d.name(e.parent), d.name(e.child)));
        if e.domain != EdgeDomain::Both {
            out.push_str(&format!(" [domains={}]", e.domain.as_str()));
        }
        out.push('\n');
    }
    out
}
