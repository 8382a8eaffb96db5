//! The Mal'tsev solver: edge-by-edge propagation of compact representations.
//!
//! Starting from a representation of the edge-free instance (domains only),
//! each edge is intersected into the family by [`next`]. The final
//! representation is nonempty exactly when the instance has a solution; its
//! first witness is one. An empty final representation yields a replayable
//! trace of every intermediate representation as an unsatisfiability
//! certificate.

use crate::algebra::{validate_maltsev, OperationTable};
use crate::certificate::Trace;
use crate::instance::{check_compatibility, Edge, Instance};
use crate::representation::{init_representation, CompactRepresentation, RepMode};

use super::family::RepView;
use super::step::step;
use super::{SolveError, SolveOutcome};

/// Intersects `edge` into the represented family.
///
/// `touched[v]` must be true exactly when `v` occurs in an edge already
/// intersected into `rep`; the step exploits the fact that untouched
/// variables are free factors of the family. The result is deterministic in
/// its inputs.
pub fn next(
    rep: &CompactRepresentation,
    op: &OperationTable,
    edge: &Edge,
    touched: &[bool],
) -> CompactRepresentation {
    let view = RepView::build(rep);
    step(&view, op, edge, touched, &|_, _| true, RepMode::Maltsev)
}

/// Runs the solver and returns every intermediate representation,
/// `R_0` through `R_m` for an instance with `m` edges.
///
/// An instance with an empty domain has no maps at all; its chain is `m + 1`
/// empty representations by convention.
pub fn representation_chain(
    inst: &Instance,
    op: &OperationTable,
) -> Result<Vec<CompactRepresentation>, SolveError> {
    validate_maltsev(op)?;
    check_compatibility(inst, op)?;
    let m = inst.edges().len();
    if inst.has_empty_domain() {
        let empty = CompactRepresentation::new(RepMode::Maltsev, inst.n(), inst.q());
        return Ok(vec![empty; m + 1]);
    }
    let mut reps = Vec::with_capacity(m + 1);
    reps.push(init_representation(inst).expect("domains checked nonempty"));
    let mut touched = vec![false; inst.n()];
    for edge in inst.edges() {
        let stepped = next(reps.last().unwrap(), op, edge, &touched);
        reps.push(stepped);
        touched[edge.from] = true;
        touched[edge.to] = true;
    }
    Ok(reps)
}

/// Decides the instance under a Mal'tsev polymorphism.
///
/// Returns a concrete solution, or a trace certificate binding the instance
/// and operation whose replay establishes unsatisfiability.
pub fn solve(inst: &Instance, op: &OperationTable) -> Result<SolveOutcome, SolveError> {
    let reps = representation_chain(inst, op)?;
    match reps.last().and_then(|r| r.first_witness()) {
        Some(w) => Ok(SolveOutcome::Sat(w.clone())),
        None => Ok(SolveOutcome::Unsat(Trace::new(inst, op, reps))),
    }
}
