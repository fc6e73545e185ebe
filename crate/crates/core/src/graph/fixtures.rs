//! Reference selection diagrams over treatment `X`, outcome `Y` and the
//! observed pre-treatment covariates `Z`, `W`.
//!
//! | diagram | s-admissible backdoor sets among subsets of {Z, W} |
//! |---------|-----------------------------------------------------|
//! | `fig1c` | {Z, W} (W -> X exists only in the source)            |
//! | `fig2a` | {Z, W}                                               |
//! | `fig2b` | none: {Z, W} is s-admissible, a latent confounds X, Y |
//! | `fig2c` | {Z}: {Z, W} is a backdoor set but W is a collider with S |
//! | `fig2d` | {} and {W}: Z is a collider between two latents       |

use super::{EdgeDomain, SelectionDiagram};

fn build(b: super::DiagramBuilder) -> SelectionDiagram {
    b.treatment("X")
        .outcome("Y")
        .build()
        .expect("fixture diagrams are valid")
}

/// Source and target differ in the Z and W distributions, and the W -> X
/// edge is absent from the target graph.
pub fn fig1c() -> SelectionDiagram {
    build(
        SelectionDiagram::builder()
            .observed("Z")
            .observed("W")
            .observed("X")
            .observed("Y")
            .selection("S_Z")
            .selection("S_X")
            .selection("S_W")
            .edge("X", "Y")
            .edge("Z", "Y")
            .edge("Z", "X")
            .edge("W", "Y")
            .edge_in("W", "X", EdgeDomain::Source)
            .edge("S_Z", "Z")
            .edge("S_X", "X")
            .edge("S_W", "W"),
    )
}

pub fn fig2a() -> SelectionDiagram {
    build(
        SelectionDiagram::builder()
            .observed("Z")
            .observed("W")
            .observed("X")
            .observed("Y")
            .selection("S_Z")
            .selection("S_W")
            .edge("X", "Y")
            .edge("Z", "X")
            .edge("Z", "Y")
            .edge("W", "X")
            .edge("W", "Y")
            .edge("S_Z", "Z")
            .edge("S_W", "W"),
    )
}

pub fn fig2b() -> SelectionDiagram {
    build(
        SelectionDiagram::builder()
            .observed("Z")
            .observed("W")
            .observed("X")
            .observed("Y")
            .latent("H")
            .selection("S_Z")
            .selection("S_W")
            .edge("X", "Y")
            .edge("Z", "X")
            .edge("Z", "Y")
            .edge("W", "X")
            .edge("W", "Y")
            .edge("H", "X")
            .edge("H", "Y")
            .edge("S_Z", "Z")
            .edge("S_W", "W"),
    )
}

pub fn fig2c() -> SelectionDiagram {
    build(
        SelectionDiagram::builder()
            .observed("Z")
            .observed("W")
            .observed("X")
            .observed("Y")
            .latent("H")
            .selection("S_Z")
            .selection("S_W")
            .edge("X", "Y")
            .edge("Z", "X")
            .edge("Z", "Y")
            .edge("H", "W")
            .edge("H", "Y")
            .edge("S_Z", "Z")
            .edge("S_W", "W"),
    )
}

pub fn fig2d() -> SelectionDiagram {
    build(
        SelectionDiagram::builder()
            .latent("H1")
            .latent("H2")
            .observed("W")
            .observed("Z")
            .observed("X")
            .observed("Y")
            .selection("S_Z")
            .edge("H1", "Z")
            .edge("H2", "Z")
            .edge("S_Z", "Z")
            .edge("H2", "X")
            .edge("H1", "Y")
            .edge("X", "Y")
            .edge("W", "Y"),
    )
}
