//! Restriction of a represented solution family to a fixed prefix.
//!
//! `restrict` performs the level-by-level prefix fixing that underlies
//! `fixvalues`: level `j` replaces the family with one whose maps all carry
//! the prefix value at position `j`, rebuilding the signature keys for
//! positions past `j` from closures of the current family and rebinding all
//! positions up to `j` to a single anchor witness. Two facts keep this fast:
//!
//! * If every current map already holds the prefix value at `j`, the family
//!   is unchanged by the level, so it is skipped outright.
//! * If every current map agrees on some later position `i`, the anchor
//!   witnesses position `i` directly; no closure over `(j, i)` is needed.
//!
//! Witness choices are deterministic (first discovery in closure order), so
//! a replay of the same inputs reproduces the same family exactly.

use std::borrow::Cow;

use crate::algebra::{OperationTable, Value};
use crate::instance::AssignmentMap;
use crate::representation::{CompactRepresentation, RepMode, WitnessKey};

use super::closure::Closure;
use super::ValueSet;

const ABSENT: u32 = u32::MAX;

/// Flat, index-based view of a representation, precomputed once per step.
pub(crate) struct RepView<'a> {
    pub n: usize,
    pub q: usize,
    /// Distinct stored maps in first-occurrence key order.
    pub maps: Vec<&'a AssignmentMap>,
    /// Dense `(i*q + a)*q + b` to index into `maps`, `ABSENT` when missing.
    pub keyed: Vec<u32>,
    /// Values taken at each coordinate across `maps`.
    pub masks: Vec<ValueSet>,
    /// Projection keys `(coords, vals, map index)` in ascending key order.
    pub proj: Vec<(Vec<usize>, Vec<Value>, u32)>,
}

impl<'a> RepView<'a> {
    pub(crate) fn build(rep: &'a CompactRepresentation) -> RepView<'a> {
        let n = rep.n();
        let q = rep.q();
        let arena = rep.arena();
        let occurrence = rep.first_occurrence_ids();
        let mut local_of = vec![ABSENT; arena.len()];
        let mut maps = Vec::with_capacity(occurrence.len());
        for (local, &id) in occurrence.iter().enumerate() {
            local_of[id as usize] = local as u32;
            maps.push(&arena[id as usize]);
        }
        let mut keyed = vec![ABSENT; n * q * q];
        let mut proj = Vec::new();
        for (key, id) in rep.store_ids() {
            let local = local_of[id as usize];
            match key {
                WitnessKey::Sig { i, a, b } => {
                    keyed[(i * q + *a as usize) * q + *b as usize] = local;
                }
                WitnessKey::Proj { coords, vals } => {
                    proj.push((coords.clone(), vals.clone(), local));
                }
            }
        }
        let masks = masks_of(&maps, n);
        RepView {
            n,
            q,
            maps,
            keyed,
            masks,
            proj,
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Whether the signature key `(i, a, b)` is present.
    pub(crate) fn has_pair(&self, i: usize, a: Value, b: Value) -> bool {
        self.keyed[(i * self.q + a as usize) * self.q + b as usize] != ABSENT
    }
}

fn masks_of(maps: &[&AssignmentMap], n: usize) -> Vec<ValueSet> {
    let mut masks = vec![ValueSet::new(); n];
    for m in maps {
        for (c, mask) in masks.iter_mut().enumerate() {
            mask.insert(m.get(c));
        }
    }
    masks
}

/// A represented family during and after prefix restriction.
pub(crate) struct PrefixFamily<'a> {
    pub n: usize,
    pub q: usize,
    arena: Vec<Cow<'a, AssignmentMap>>,
    /// Arena indices of the current distinct maps, canonical key order.
    current: Vec<u32>,
    /// Dense `(i*q + a)*q + b` to arena index.
    keyed: Vec<u32>,
    /// Values taken at each coordinate across the current maps.
    masks: Vec<ValueSet>,
    /// Projection keys with arena witness, ascending `(coords, vals)`.
    proj: Vec<(Vec<usize>, Vec<Value>, u32)>,
    empty: bool,
}

impl<'a> PrefixFamily<'a> {
    fn empty(n: usize, q: usize) -> Self {
        PrefixFamily {
            n,
            q,
            arena: Vec::new(),
            current: Vec::new(),
            keyed: Vec::new(),
            masks: Vec::new(),
            proj: Vec::new(),
            empty: true,
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.empty
    }

    /// Current distinct maps in canonical order.
    pub(crate) fn current_maps(&self) -> Vec<&AssignmentMap> {
        self.current
            .iter()
            .map(|&ix| self.arena[ix as usize].as_ref())
            .collect()
    }

    /// Converts the family into a representation with the given mode.
    pub(crate) fn into_representation(self, mode: RepMode) -> CompactRepresentation {
        let mut rep = CompactRepresentation::new(mode, self.n, self.q);
        if self.empty {
            return rep;
        }
        let q = self.q;
        for i in 0..self.n {
            for a in 0..q {
                for b in 0..q {
                    let ix = self.keyed[(i * q + a) * q + b];
                    if ix != ABSENT {
                        rep.insert(
                            WitnessKey::Sig {
                                i,
                                a: a as Value,
                                b: b as Value,
                            },
                            self.arena[ix as usize].as_ref().clone(),
                        );
                    }
                }
            }
        }
        for (coords, vals, ix) in &self.proj {
            rep.insert(
                WitnessKey::Proj {
                    coords: coords.clone(),
                    vals: vals.clone(),
                },
                self.arena[*ix as usize].as_ref().clone(),
            );
        }
        rep
    }
}

/// Restricts the family in `view` to maps carrying `prefix[..len]`.
///
/// Returns the empty family as soon as some level's prefix value is not
/// taken at that position.
pub(crate) fn restrict<'a>(
    view: &RepView<'a>,
    op: &OperationTable,
    prefix: &AssignmentMap,
    len: usize,
) -> PrefixFamily<'a> {
    let n = view.n;
    let q = view.q;
    assert!(len <= n, "prefix length {len} exceeds {n}");
    assert_eq!(prefix.len(), n, "prefix map must assign every variable");

    let mut fam = PrefixFamily {
        n,
        q,
        arena: view.maps.iter().map(|&m| Cow::Borrowed(m)).collect(),
        current: (0..view.maps.len() as u32).collect(),
        keyed: view.keyed.clone(),
        masks: view.masks.clone(),
        proj: view.proj.clone(),
        empty: false,
    };
    if view.is_empty() && len > 0 {
        return PrefixFamily::empty(n, q);
    }
    let mut spare = vec![ABSENT; n * q * q];

    for j in 0..len {
        let pj = prefix.get(j);
        let anchor = fam.keyed[(j * q + pj as usize) * q + pj as usize];
        if anchor == ABSENT {
            return PrefixFamily::empty(n, q);
        }
        if fam.masks[j].single() == Some(pj) {
            continue;
        }

        // Phase A: plan the level against the immutable arena. New maps go
        // to `fresh`; their final arena index is `arena.len() + offset`.
        let arena_len = fam.arena.len();
        let mut fresh: Vec<AssignmentMap> = Vec::new();
        let cur_maps: Vec<&AssignmentMap> = fam
            .current
            .iter()
            .map(|&ix| fam.arena[ix as usize].as_ref())
            .collect();
        let scratch = &mut spare;
        scratch.fill(ABSENT);
        for (ip, slot) in prefix.values()[..=j].iter().enumerate() {
            scratch[(ip * q + *slot as usize) * q + *slot as usize] = anchor;
        }

        for i in j + 1..n {
            let row = &fam.keyed[i * q * q..(i + 1) * q * q];
            if row.iter().all(|&ix| ix == ABSENT) {
                continue;
            }
            if let Some(v) = fam.masks[i].single() {
                // Every current map holds v at i, the anchor included, so it
                // witnesses the one surviving key there.
                if row[v as usize * q + v as usize] != ABSENT {
                    scratch[(i * q + v as usize) * q + v as usize] = anchor;
                }
                continue;
            }
            let cl = Closure::close(&cur_maps, &[j, i], op);
            for a in 0..q as Value {
                let mut ta_slot: Option<(u32, &AssignmentMap)> = None;
                for b in a..q as Value {
                    let ab = row[a as usize * q + b as usize];
                    let ba = row[b as usize * q + a as usize];
                    if ab == ABSENT || ba == ABSENT {
                        debug_assert_eq!(ab, ba, "unpaired signature key at ({i},{a},{b})");
                        continue;
                    }
                    let (ta_ix, ta) = match ta_slot {
                        Some(pair) => pair,
                        None => match cl.lookup(&[pj, a]) {
                            Some(w) => {
                                let ix = arena_len as u32 + fresh.len() as u32;
                                fresh.push(w.clone());
                                ta_slot = Some((ix, w));
                                (ix, w)
                            }
                            None => break,
                        },
                    };
                    if a == b {
                        scratch[(i * q + a as usize) * q + a as usize] = ta_ix;
                    } else {
                        let combined = minority_combine(
                            op,
                            ta,
                            fam.arena[ab as usize].as_ref(),
                            fam.arena[ba as usize].as_ref(),
                        );
                        let cix = arena_len as u32 + fresh.len() as u32;
                        fresh.push(combined);
                        scratch[(i * q + a as usize) * q + b as usize] = ta_ix;
                        scratch[(i * q + b as usize) * q + a as usize] = cix;
                    }
                }
            }
        }

        // Projection keys survive when their tuple, extended with the level
        // value at j, is still reachable from the current family.
        let mut new_proj = Vec::with_capacity(fam.proj.len());
        {
            let mut group_start = 0;
            while group_start < fam.proj.len() {
                let coords = &fam.proj[group_start].0;
                let mut group_end = group_start;
                while group_end < fam.proj.len() && &fam.proj[group_end].0 == coords {
                    group_end += 1;
                }
                let mut full = Vec::with_capacity(coords.len() + 1);
                full.push(j);
                full.extend_from_slice(coords);
                let cl = Closure::close(&cur_maps, &full, op);
                let mut target = Vec::with_capacity(coords.len() + 1);
                for (coords, vals, _) in &fam.proj[group_start..group_end] {
                    target.clear();
                    target.push(pj);
                    target.extend_from_slice(vals);
                    if let Some(w) = cl.lookup(&target) {
                        let ix = arena_len as u32 + fresh.len() as u32;
                        fresh.push(w.clone());
                        new_proj.push((coords.clone(), vals.clone(), ix));
                    }
                }
                group_start = group_end;
            }
        }

        // Phase B: commit.
        drop(cur_maps);
        fam.arena.extend(fresh.into_iter().map(Cow::Owned));
        std::mem::swap(&mut fam.keyed, scratch);
        fam.proj = new_proj;
        let mut seen = vec![false; fam.arena.len()];
        fam.current.clear();
        for &ix in fam.keyed.iter() {
            if ix != ABSENT && !seen[ix as usize] {
                seen[ix as usize] = true;
                fam.current.push(ix);
            }
        }
        for &(_, _, ix) in &fam.proj {
            if !seen[ix as usize] {
                seen[ix as usize] = true;
                fam.current.push(ix);
            }
        }
        // Later levels only read masks past j; the finished family's masks
        // are not read at all, so the last level leaves them stale.
        if j + 1 < len {
            for mask in &mut fam.masks[j + 1..] {
                *mask = ValueSet::new();
            }
            for &ix in &fam.current {
                let m = fam.arena[ix as usize].as_ref();
                for (c, mask) in fam.masks.iter_mut().enumerate().skip(j + 1) {
                    mask.insert(m.get(c));
                }
            }
        }
    }
    fam
}

/// Builds a map that agrees with `fresh` below the pair position and swaps
/// the pair value: two applications of the operation,
/// `op(fresh, .., fresh, op(fresh, t_ab, .., t_ab, t_ba))`.
///
/// At the pair position this yields the partner value for a minority pair.
/// At earlier positions `t_ab` and `t_ba` agree, and the inner application
/// returns either that shared value or the value of `fresh`; the outer
/// application collapses both cases to the value of `fresh` (for a Mal'tsev
/// operation the outer application is the identity and the whole expression
/// is `op(fresh, t_ab, t_ba)`).
pub(crate) fn minority_combine(
    op: &OperationTable,
    fresh: &AssignmentMap,
    t_ab: &AssignmentMap,
    t_ba: &AssignmentMap,
) -> AssignmentMap {
    let r = op.arity();
    let n = fresh.len();
    let mut args = vec![0 as Value; r];
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        args[0] = fresh.get(c);
        for slot in &mut args[1..r - 1] {
            *slot = t_ab.get(c);
        }
        args[r - 1] = t_ba.get(c);
        let inner = op.eval(&args);
        for slot in &mut args[..r - 1] {
            *slot = fresh.get(c);
        }
        args[r - 1] = inner;
        out.push(op.eval(&args));
    }
    AssignmentMap::new(out)
}
