//! The generalized majority-minority solver.
//!
//! Same edge-by-edge scheme as the Mal'tsev solver, with two differences
//! dictated by the operation's pair classification: signature keys are kept
//! only for minority pairs (majority pairs carry no generation power), and
//! the representation additionally stores one witness per reachable value
//! tuple on every coordinate set of size at most `k`, where the operation
//! has arity `k + 1`. Those projection keys are rebuilt after each edge by
//! reachability queries extending the tuple with the edge's endpoints.

use crate::algebra::{validate_gmm, OperationTable, PairClassification, Value};
use crate::certificate::Trace;
use crate::instance::{check_compatibility, Edge, Instance};
use crate::representation::{init_representation_gmm, CompactRepresentation, RepMode, WitnessKey};

use super::closure::Closure;
use super::family::RepView;
use super::step::step;
use super::{SolveError, SolveOutcome};

/// Intersects `edge` into the represented family, minority signature keys
/// and projection keys both.
///
/// `class` must be the pair classification of `op`; `touched[v]` must be
/// true exactly when `v` occurs in an edge already intersected into `rep`.
pub fn next_gmm(
    rep: &CompactRepresentation,
    op: &OperationTable,
    class: &PairClassification,
    edge: &Edge,
    touched: &[bool],
) -> CompactRepresentation {
    debug_assert!(matches!(rep.mode(), RepMode::Gmm { .. }));
    let view = RepView::build(rep);
    let minority = |a: Value, b: Value| class.is_minority(a, b);
    let mut out = step(&view, op, edge, touched, &minority, rep.mode());
    if out.is_empty() {
        // Nothing satisfies the edge; projection keys die with everything.
        return out;
    }

    // Rebuild projection keys: a tuple survives when it extends, over the
    // edge endpoints, to some relation pair reachable from the family.
    // Groups share one closure per coordinate set.
    let rel = edge.rel.pairs();
    let mut start = 0;
    while start < view.proj.len() {
        let coords = &view.proj[start].0;
        let mut end = start;
        while end < view.proj.len() && view.proj[end].0 == *coords {
            end += 1;
        }
        let mut full = coords.clone();
        full.push(edge.from);
        full.push(edge.to);
        let cl = Closure::close(&view.maps, &full, op);
        let mut target = vec![0 as Value; coords.len() + 2];
        for (coords, vals, _) in &view.proj[start..end] {
            target[..vals.len()].copy_from_slice(vals);
            'pairs: for &(x, y) in rel {
                target[vals.len()] = x;
                target[vals.len() + 1] = y;
                if let Some(w) = cl.lookup(&target) {
                    out.insert(
                        WitnessKey::Proj {
                            coords: coords.clone(),
                            vals: vals.clone(),
                        },
                        w.clone(),
                    );
                    break 'pairs;
                }
            }
        }
        start = end;
    }
    out
}

/// Runs the solver and returns every intermediate representation,
/// `R_0` through `R_m` for an instance with `m` edges.
pub fn representation_chain_gmm(
    inst: &Instance,
    op: &OperationTable,
) -> Result<Vec<CompactRepresentation>, SolveError> {
    let class = validate_gmm(op)?;
    check_compatibility(inst, op)?;
    let k = op.arity() - 1;
    let m = inst.edges().len();
    if inst.has_empty_domain() {
        let empty = CompactRepresentation::new(RepMode::Gmm { k }, inst.n(), inst.q());
        return Ok(vec![empty; m + 1]);
    }
    let mut reps = Vec::with_capacity(m + 1);
    reps.push(
        init_representation_gmm(inst, |a, b| class.is_minority(a, b), k)
            .expect("domains checked nonempty"),
    );
    let mut touched = vec![false; inst.n()];
    for edge in inst.edges() {
        let stepped = next_gmm(reps.last().unwrap(), op, &class, edge, &touched);
        reps.push(stepped);
        touched[edge.from] = true;
        touched[edge.to] = true;
    }
    Ok(reps)
}

/// Decides the instance under a generalized majority-minority polymorphism.
pub fn solve_gmm(inst: &Instance, op: &OperationTable) -> Result<SolveOutcome, SolveError> {
    let reps = representation_chain_gmm(inst, op)?;
    match reps.last().and_then(|r| r.first_witness()) {
        Some(w) => Ok(SolveOutcome::Sat(w.clone())),
        None => Ok(SolveOutcome::Unsat(Trace::new(inst, op, reps))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::OperationTable;
    use crate::instance::{AssignmentMap, Instance};
    use crate::representation::validate_against_solutions;
    use crate::solver::maltsev;
    use crate::solver::SolveOutcome;

    fn majority2() -> OperationTable {
        let mut table = Vec::new();
        for x in 0..2u8 {
            for y in 0..2u8 {
                for z in 0..2u8 {
                    table.push(if x + y + z >= 2 { 1 } else { 0 });
                }
            }
        }
        OperationTable::new(2, 3, table).unwrap()
    }

    fn brute(inst: &Instance, l: usize) -> Vec<AssignmentMap> {
        let prefix = inst.prefix_instance(l);
        let mut sols = Vec::new();
        let n = inst.n();
        let mut idx = vec![0usize; n];
        'outer: loop {
            let m = AssignmentMap::new(
                idx.iter()
                    .enumerate()
                    .map(|(v, &i)| inst.domain(v)[i])
                    .collect(),
            );
            if prefix.is_homomorphism(&m) {
                sols.push(m);
            }
            for v in (0..n).rev() {
                idx[v] += 1;
                if idx[v] < inst.domain(v).len() {
                    continue 'outer;
                }
                idx[v] = 0;
                if v == 0 {
                    break 'outer;
                }
            }
        }
        sols
    }

    #[test]
    fn majority_implication_chain_is_sat() {
        let le = vec![(0, 0), (0, 1), (1, 1)];
        let inst = Instance::from_parts(
            3,
            2,
            vec![vec![0, 1]; 3],
            vec![(0, 1, le.clone()), (1, 2, le)],
        )
        .unwrap();
        let op = majority2();
        let class = validate_gmm(&op).unwrap();
        let reps = representation_chain_gmm(&inst, &op).unwrap();
        for (l, rep) in reps.iter().enumerate() {
            let sols = brute(&inst, l);
            validate_against_solutions(rep, &sols, |a, b| class.is_minority(a, b))
                .unwrap_or_else(|e| panic!("step {l}: {e}"));
        }
        match solve_gmm(&inst, &op).unwrap() {
            SolveOutcome::Sat(w) => assert!(inst.is_homomorphism(&w)),
            SolveOutcome::Unsat(_) => panic!("instance is satisfiable"),
        }
    }

    #[test]
    fn majority_cycle_with_strict_edge_is_unsat() {
        let le = vec![(0, 0), (0, 1), (1, 1)];
        // x0 <= x1 <= x2 and x2 < x0 is contradictory.
        let inst = Instance::from_parts(
            3,
            2,
            vec![vec![0, 1]; 3],
            vec![(0, 1, le.clone()), (1, 2, le), (2, 0, vec![(0, 1)])],
        )
        .unwrap();
        let op = majority2();
        match solve_gmm(&inst, &op).unwrap() {
            SolveOutcome::Unsat(trace) => assert_eq!(trace.reps().len(), 4),
            SolveOutcome::Sat(w) => panic!("unexpected solution {w:?}"),
        }
    }

    #[test]
    fn maltsev_operation_agrees_with_maltsev_solver() {
        // x1 = x0 + 1, x2 = x1 + 1, and x2 = x0 (forcing 3 | 2, impossible
        // over Z_3 shifts: 0 = 2 mod 3 fails), so unsat.
        let succ = vec![(0, 1), (1, 2), (2, 0)];
        let inst = Instance::from_parts(
            3,
            3,
            vec![vec![0, 1, 2]; 3],
            vec![
                (0, 1, succ.clone()),
                (1, 2, succ),
                (0, 2, vec![(0, 0), (1, 1), (2, 2)]),
            ],
        )
        .unwrap();
        let op = OperationTable::affine_maltsev(3);
        let direct = maltsev::solve(&inst, &op).unwrap();
        let lifted = solve_gmm(&inst, &op).unwrap();
        assert!(!direct.is_sat());
        assert!(!lifted.is_sat());

        // A satisfiable variant: drop the identity tie, fix x2's domain.
        let succ = vec![(0, 1), (1, 2), (2, 0)];
        let sat = Instance::from_parts(
            3,
            3,
            vec![vec![0, 1, 2], vec![0, 1, 2], vec![2]],
            vec![(0, 1, succ.clone()), (1, 2, vec![(1, 2)])],
        )
        .unwrap();
        let d = maltsev::solve(&sat, &op).unwrap();
        let g = solve_gmm(&sat, &op).unwrap();
        match (d, g) {
            (SolveOutcome::Sat(a), SolveOutcome::Sat(b)) => {
                assert!(sat.is_homomorphism(&a));
                assert!(sat.is_homomorphism(&b));
            }
            other => panic!("expected two solutions, got {other:?}"),
        }
    }

    #[test]
    fn quaternary_minority_operation_tracks_brute_force() {
        // phi(a,b,c,d) = a - b + d mod 3: idempotent, every pair minority.
        let q = 3u8;
        let mut table = Vec::new();
        for a in 0..q {
            for b in 0..q {
                for _c in 0..q {
                    for d in 0..q {
                        table.push((a as i16 - b as i16 + d as i16).rem_euclid(q as i16) as u8);
                    }
                }
            }
        }
        let op = OperationTable::new(q as usize, 4, table).unwrap();
        let class = validate_gmm(&op).unwrap();
        let succ = vec![(0, 1), (1, 2), (2, 0)];
        // x2 is pinned to 2, so the succ chain forces x0 = 0, x1 = 1.
        let inst = Instance::from_parts(
            3,
            3,
            vec![vec![0, 1, 2], vec![0, 1, 2], vec![2]],
            vec![(0, 1, succ), (1, 2, vec![(1, 2)])],
        )
        .unwrap();
        let reps = representation_chain_gmm(&inst, &op).unwrap();
        assert_eq!(reps[0].mode(), RepMode::Gmm { k: 3 });
        for (l, rep) in reps.iter().enumerate() {
            let sols = brute(&inst, l);
            validate_against_solutions(rep, &sols, |a, b| class.is_minority(a, b))
                .unwrap_or_else(|e| panic!("step {l}: {e}"));
        }
    }
}
