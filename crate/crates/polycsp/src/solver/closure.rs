//! Fixpoint closure of a witness family under the polymorphism, tracked on
//! projection tuples.
//!
//! The projection of an operation application onto a coordinate set depends
//! only on the projections of its arguments, so reachability over those
//! coordinates can be computed on projection tuples alone, materializing one
//! full witness map per newly reached tuple. Discovery order is canonical:
//! seeds in the given order, then repeated rounds that apply the operation to
//! every argument combination in lexicographic order of witness indices,
//! recording new tuples immediately. A combination whose arguments all existed
//! before the current round was already processed in an earlier round, so each
//! round only enumerates combinations with at least one argument from the
//! previous round's discoveries; this reproduces the order of the naive
//! re-process-everything loop exactly.

use std::borrow::Cow;
use std::collections::HashMap;

use crate::algebra::{OperationTable, Value};
use crate::instance::AssignmentMap;

use super::ValueSet;

/// Widest projection tuple the engine tracks.
pub(crate) const MAX_WIDTH: usize = 8;

const ABSENT: u32 = u32::MAX;

/// Tuple index: dense when the packed space is small, hashed otherwise.
enum TupleTable {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

impl TupleTable {
    fn get(&self, packed: u64) -> Option<u32> {
        match self {
            TupleTable::Dense(v) => {
                let id = v[packed as usize];
                (id != ABSENT).then_some(id)
            }
            TupleTable::Sparse(m) => m.get(&packed).copied(),
        }
    }

    fn set(&mut self, packed: u64, id: u32) {
        match self {
            TupleTable::Dense(v) => v[packed as usize] = id,
            TupleTable::Sparse(m) => {
                m.insert(packed, id);
            }
        }
    }
}

/// Closure of a seed family under one operation, over a coordinate tuple.
pub(crate) struct Closure<'a> {
    coords: Vec<usize>,
    q: u64,
    table: TupleTable,
    witnesses: Vec<Cow<'a, AssignmentMap>>,
    projs: Vec<[Value; MAX_WIDTH]>,
}

impl<'a> Closure<'a> {
    /// Closes `seeds` under `op`, tracking projections onto `coords`.
    ///
    /// Coordinates may repeat. Seeds are recorded in the given order (first
    /// witness per tuple wins), then rounds run until no tuple is new or the
    /// reachable bound is hit.
    pub(crate) fn close(
        seeds: &[&'a AssignmentMap],
        coords: &[usize],
        op: &OperationTable,
    ) -> Closure<'a> {
        let w = coords.len();
        assert!((1..=MAX_WIDTH).contains(&w), "width {w} out of range");
        let q = op.q() as u64;
        let cap = q
            .checked_pow(w as u32)
            .expect("packed tuple space must fit in u64");
        let table = if cap <= 1 << 16 {
            TupleTable::Dense(vec![ABSENT; cap as usize])
        } else {
            TupleTable::Sparse(HashMap::new())
        };
        let mut closure = Closure {
            coords: coords.to_vec(),
            q,
            table,
            witnesses: Vec::new(),
            projs: Vec::new(),
        };

        let mut seed_values = [ValueSet::new(); MAX_WIDTH];
        for &seed in seeds {
            let proj = closure.project(seed);
            for (slot, &c) in seed_values.iter_mut().zip(coords) {
                slot.insert(seed.get(c));
            }
            let packed = closure.pack(&proj);
            if closure.table.get(packed).is_none() {
                closure.record(packed, proj, Cow::Borrowed(seed));
            }
        }

        // Upper bound on reachable tuples: the product over coordinates of the
        // operation closure of the seed values there. Computing the value
        // closure costs q^arity per round, so it is only worthwhile for small
        // tables; otherwise fall back to the full tuple space.
        let bound = if op.q() <= 4 && op.arity() <= 5 {
            seed_values[..w]
                .iter()
                .map(|s| value_closure(*s, op).len() as u64)
                .product()
        } else {
            cap
        };

        let r = op.arity();
        assert!(r <= MAX_WIDTH, "operation arity {r} out of range");
        let mut band_start = 0;
        loop {
            let band_end = closure.witnesses.len();
            if band_start == band_end || closure.witnesses.len() as u64 >= bound {
                break;
            }
            let mut args = [0usize; MAX_WIDTH];
            closure.round(op, &mut args, 0, false, band_start, band_end, bound);
            band_start = band_end;
        }
        closure
    }

    /// Enumerates argument combinations lexicographically, skipping those
    /// whose arguments all predate the current band. `in_band` records whether
    /// any argument so far is at or past `band_start`; the last position must
    /// reach the band if none before it did.
    #[allow(clippy::too_many_arguments)]
    fn round(
        &mut self,
        op: &OperationTable,
        args: &mut [usize; MAX_WIDTH],
        pos: usize,
        in_band: bool,
        band_start: usize,
        band_end: usize,
        bound: u64,
    ) {
        let r = op.arity();
        if pos == r {
            self.apply(op, &args[..r]);
            return;
        }
        let start = if pos == r - 1 && !in_band {
            band_start
        } else {
            0
        };
        for idx in start..band_end {
            args[pos] = idx;
            self.round(
                op,
                args,
                pos + 1,
                in_band || idx >= band_start,
                band_start,
                band_end,
                bound,
            );
            if self.witnesses.len() as u64 >= bound {
                return;
            }
        }
    }

    fn apply(&mut self, op: &OperationTable, args: &[usize]) {
        let mut proj = [0 as Value; MAX_WIDTH];
        let mut arg_vals = [0 as Value; MAX_WIDTH];
        for (slot, t) in proj.iter_mut().zip(0..self.coords.len()) {
            for (v, &a) in arg_vals.iter_mut().zip(args) {
                *v = self.projs[a][t];
            }
            *slot = op.eval(&arg_vals[..args.len()]);
        }
        let packed = self.pack(&proj);
        if self.table.get(packed).is_some() {
            return;
        }
        let n = self.witnesses[args[0]].len();
        let mut vals = Vec::with_capacity(n);
        if args.len() == 3 {
            let (m0, m1, m2) = (
                self.witnesses[args[0]].as_ref(),
                self.witnesses[args[1]].as_ref(),
                self.witnesses[args[2]].as_ref(),
            );
            for c in 0..n {
                vals.push(op.eval3(m0.get(c), m1.get(c), m2.get(c)));
            }
        } else {
            for c in 0..n {
                for (v, &a) in arg_vals.iter_mut().zip(args) {
                    *v = self.witnesses[a].get(c);
                }
                vals.push(op.eval(&arg_vals[..args.len()]));
            }
        }
        self.record(packed, proj, Cow::Owned(AssignmentMap::new(vals)));
    }

    fn record(&mut self, packed: u64, proj: [Value; MAX_WIDTH], map: Cow<'a, AssignmentMap>) {
        let id = self.witnesses.len() as u32;
        self.table.set(packed, id);
        self.witnesses.push(map);
        self.projs.push(proj);
    }

    fn project(&self, map: &AssignmentMap) -> [Value; MAX_WIDTH] {
        let mut proj = [0 as Value; MAX_WIDTH];
        for (slot, &c) in proj.iter_mut().zip(&self.coords) {
            *slot = map.get(c);
        }
        proj
    }

    fn pack(&self, proj: &[Value; MAX_WIDTH]) -> u64 {
        proj[..self.coords.len()]
            .iter()
            .fold(0u64, |acc, &v| acc * self.q + v as u64)
    }

    /// The witness recorded for `tuple`, if that projection is reachable.
    pub(crate) fn lookup(&self, tuple: &[Value]) -> Option<&AssignmentMap> {
        debug_assert_eq!(tuple.len(), self.coords.len());
        if tuple.iter().any(|&v| v as u64 >= self.q) {
            return None;
        }
        let mut proj = [0 as Value; MAX_WIDTH];
        proj[..tuple.len()].copy_from_slice(tuple);
        let packed = self.pack(&proj);
        self.table.get(packed).map(|id| self.witnesses[id as usize].as_ref())
    }

    /// Number of distinct reachable tuples.
    #[cfg(test)]
    pub(crate) fn reached(&self) -> usize {
        self.witnesses.len()
    }
}

/// Closes a set of values under all applications of `op`.
fn value_closure(seed: ValueSet, op: &OperationTable) -> ValueSet {
    let mut vals = seed;
    let q = op.q();
    // A full or empty set is already closed.
    if vals.is_empty() || vals.len() == q {
        return vals;
    }
    let r = op.arity();
    let mut members: Vec<Value> = Vec::with_capacity(q);
    let mut args = vec![0usize; r];
    let mut buf = vec![0 as Value; r];
    loop {
        let mut next = vals;
        members.clear();
        members.extend(vals.iter());
        args.fill(0);
        'outer: loop {
            for (b, &a) in buf.iter_mut().zip(&args) {
                *b = members[a];
            }
            next.insert(op.eval(&buf));
            for slot in (0..r).rev() {
                args[slot] += 1;
                if args[slot] < members.len() {
                    break;
                }
                args[slot] = 0;
                if slot == 0 {
                    break 'outer;
                }
            }
        }
        if next == vals {
            return vals;
        }
        vals = next;
        if vals.len() == q {
            return vals;
        }
    }
}
