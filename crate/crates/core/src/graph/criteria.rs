use super::{d_separated, Manipulation, NodeId, NodeKind, SelectionDiagram, Slice};
use crate::error::{input, Error, Result};

/// Largest candidate set [`enumerate_sabs`] will expand.
pub const MAX_ENUMERATION: usize = 20;

fn check_roles(d: &SelectionDiagram, x: NodeId, y: NodeId, z: &[NodeId]) -> Result<()> {
    let n = d.node_count();
    if x.0 >= n || y.0 >= n {
        return Err(input("treatment or outcome out of range"));
    }
    if x == y {
        return Err(input("treatment and outcome must differ"));
    }
    let desc = d.descendants(x);
    for (i, v) in z.iter().enumerate() {
        if v.0 >= n {
            return Err(input(format!("node index {} out of range", v.0)));
        }
        if z[..i].contains(v) {
            return Err(input(format!("`{}` listed twice", d.name(*v))));
        }
        if *v == y {
            return Err(input("conditioning set contains the outcome"));
        }
        if d.kind(*v) == NodeKind::Selection {
            return Err(input(format!(
                "selection node `{}` cannot be conditioned on",
                d.name(*v)
            )));
        }
        if desc.contains(v) {
            return Err(input(format!(
                "`{}` is the treatment or one of its descendants",
                d.name(*v)
            )));
        }
    }
    Ok(())
}

/// Backdoor test in the target-domain graph: `z` d-separates `x` and `y`
/// once the edges leaving `x` are removed.
pub fn is_backdoor_set(d: &SelectionDiagram, x: NodeId, y: NodeId, z: &[NodeId]) -> Result<bool> {
    check_roles(d, x, y, z)?;
    let view = d.view(Slice::Target, Manipulation::RemoveOutOf(x));
    d_separated(&view, &[x], &[y], z)
}

/// s-admissibility: `z` d-separates `y` from every selection node once the
/// edges pointing into `x` are removed from the full diagram.
pub fn is_s_admissible(d: &SelectionDiagram, x: NodeId, y: NodeId, z: &[NodeId]) -> Result<bool> {
    check_roles(d, x, y, z)?;
    let selection = d.nodes_of_kind(NodeKind::Selection);
    if selection.is_empty() {
        return Ok(true);
    }
    let view = d.view(Slice::Full, Manipulation::RemoveInto(x));
    d_separated(&view, &[y], &selection, z)
}

/// s-admissible backdoor set: both criteria hold.
pub fn is_sabs(d: &SelectionDiagram, x: NodeId, y: NodeId, z: &[NodeId]) -> Result<bool> {
    Ok(is_backdoor_set(d, x, y, z)? && is_s_admissible(d, x, y, z)?)
}

/// All subsets of `candidates` that are s-admissible backdoor sets, ordered
/// by cardinality and then lexicographically on sorted node indices.
pub fn enumerate_sabs(
    d: &SelectionDiagram,
    x: NodeId,
    y: NodeId,
    candidates: &[NodeId],
) -> Result<Vec<Vec<NodeId>>> {
    if candidates.len() > MAX_ENUMERATION {
        return Err(Error::Size {
            what: "candidate set",
            got: candidates.len(),
            limit: MAX_ENUMERATION,
        });
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    check_roles(d, x, y, &sorted)?;
    for &c in &sorted {
        if d.kind(c) != NodeKind::Observed {
            return Err(input(format!("candidate `{}` is not observed", d.name(c))));
        }
    }
    let mut out = Vec::new();
    for subset in canonical_subsets(&sorted) {
        if is_sabs(d, x, y, &subset)? {
            out.push(subset);
        }
    }
    Ok(out)
}

/// Every subset of `items` ordered by size, then lexicographically by position.
pub fn canonical_subsets<T: Copy>(items: &[T]) -> Vec<Vec<T>> {
    let n = items.len();
    let mut out = Vec::with_capacity(1usize << n.min(24));
    for k in 0..=n {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            // advance to the next k-combination in lexicographic order
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}
