//! One propagation step: intersecting a represented family with an edge.
//!
//! For every variable `k` and every pair of values the family takes at `k`,
//! the step asks whether the pair survives the edge: a witness for `(k, a, b)`
//! needs value `a` at `k`, the edge satisfied, and a partner that agrees
//! below `k` with value `b`. In general the first question is a reachability
//! query over the coordinates `(from, to, k)` and the second is the same
//! query against the family restricted to the first witness's prefix below
//! `k`; those queries only run where they must.
//!
//! Two regimes avoid them. A variable untouched by every edge processed so
//! far (and not an endpoint of this one) is a free factor of the family, so
//! every value pair survives iff anything does, witnessed by one surviving
//! map rewritten at `k`. A variable pinned to a single value admits only the
//! reflexive pair, witnessed by any surviving map.

use crate::algebra::{OperationTable, Value};
use crate::instance::{AssignmentMap, Edge};
use crate::representation::{CompactRepresentation, RepMode, WitnessKey};

use super::closure::Closure;
use super::family::{restrict, RepView};

/// Applies `edge` to the family in `view`, producing the next representation.
///
/// `touched[v]` must say whether `v` occurs in an edge already applied;
/// `minority` filters which value pairs are recorded (always true for the
/// Mal'tsev solver). Projection keys are not produced here; the caller
/// rebuilds them for modes that carry any.
pub(crate) fn step(
    view: &RepView,
    op: &OperationTable,
    edge: &Edge,
    touched: &[bool],
    minority: &impl Fn(Value, Value) -> bool,
    mode: RepMode,
) -> CompactRepresentation {
    let n = view.n;
    let mut out = CompactRepresentation::new(mode, n, view.q);
    if view.is_empty() {
        return out;
    }
    assert_eq!(touched.len(), n, "touched flags must cover every variable");
    let rel = edge.rel.pairs();
    let sig = |i: usize, a: Value, b: Value| WitnessKey::Sig { i, a, b };

    let cl_edge = Closure::close(&view.maps, &[edge.from, edge.to], op);
    let Some(base) = rel.iter().find_map(|&(x, y)| cl_edge.lookup(&[x, y])) else {
        // No relation pair is reachable: the intersection is empty.
        return out;
    };

    for k in 0..n {
        let vals: Vec<Value> = view.masks[k].iter().collect();

        if !touched[k] && k != edge.from && k != edge.to {
            // No processed edge mentions k, so the family is a product of a
            // relation on the other variables with the domain of k: every
            // value pair at k survives, and rewriting a surviving map at k
            // stays inside the intersection.
            let rewrite = |v: Value| {
                if base.get(k) == v {
                    base.clone()
                } else {
                    let mut vals = base.values().to_vec();
                    vals[k] = v;
                    AssignmentMap::new(vals)
                }
            };
            for (ai, &a) in vals.iter().enumerate() {
                let wa = rewrite(a);
                out.insert(sig(k, a, a), wa.clone());
                for &b in &vals[ai + 1..] {
                    if !minority(a, b) {
                        continue;
                    }
                    out.insert(sig(k, a, b), wa.clone());
                    out.insert(sig(k, b, a), rewrite(b));
                }
            }
            continue;
        }

        if let [s] = vals[..] {
            // Every map holds s at k; only the reflexive pair can survive,
            // and any surviving map witnesses it.
            out.insert(sig(k, s, s), base.clone());
            continue;
        }

        let coords = [edge.from, edge.to, k];
        let cl1 = Closure::close(&view.maps, &coords, op);
        for (ai, &a) in vals.iter().enumerate() {
            let Some(ha) = first_hit(&cl1, rel, a) else {
                continue;
            };
            let ha = ha.clone();
            out.insert(sig(k, a, a), ha.clone());
            // Intersecting with the edge only removes solutions, so a pair
            // absent from the previous signature cannot appear in the new
            // one; its restriction query is skipped outright.
            let partners: Vec<Value> = vals[ai + 1..]
                .iter()
                .copied()
                .filter(|&b| minority(a, b) && view.has_pair(k, a, b))
                .collect();
            if partners.is_empty() {
                continue;
            }
            let fam = restrict(view, op, &ha, k);
            debug_assert!(!fam.is_empty(), "witness prefix died in its own family");
            if fam.is_empty() {
                continue;
            }
            let fam_maps = fam.current_maps();
            let cl2 = Closure::close(&fam_maps, &coords, op);
            for b in partners {
                if let Some(hb) = first_hit(&cl2, rel, b) {
                    out.insert(sig(k, a, b), ha.clone());
                    out.insert(sig(k, b, a), hb.clone());
                }
            }
        }
    }
    out
}

/// First witness, in relation order, of a pair extended with `v` at the
/// third coordinate.
fn first_hit<'c>(cl: &'c Closure, rel: &[(Value, Value)], v: Value) -> Option<&'c AssignmentMap> {
    rel.iter().find_map(|&(x, y)| cl.lookup(&[x, y, v]))
}
