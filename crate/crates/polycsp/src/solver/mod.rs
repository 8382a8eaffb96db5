//! Solvers built on compact representations.
//!
//! [`maltsev`] implements the iterative solver for instances preserved by a
//! Mal'tsev operation; [`gmm`] the variant for generalized majority-minority
//! operations. Both process edges one at a time, shrinking a compact
//! representation of the prefix solution set, and share the closure engine
//! in this module's private submodules.

pub mod gmm;
pub mod maltsev;

mod closure;
mod family;
mod step;

use std::collections::BTreeSet;

use crate::algebra::{AlgebraError, OperationTable, Value};
use crate::certificate::Trace;
use crate::instance::{AssignmentMap, CompatibilityError};
use crate::representation::CompactRepresentation;

/// A projection query: coordinates (repeats allowed) and the tuples accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionTarget {
    coords: Vec<usize>,
    allowed: BTreeSet<Vec<Value>>,
}

/// Shape errors when building a [`ProjectionTarget`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TargetError {
    #[error("coordinate count {got} not in 1..={max}")]
    Width { got: usize, max: usize },
    #[error("allowed tuple {tuple:?} has length {got}, expected {expected}")]
    TupleLength {
        tuple: Vec<Value>,
        got: usize,
        expected: usize,
    },
}

impl ProjectionTarget {
    /// Builds a target over `coords` accepting exactly `allowed`.
    pub fn new(
        coords: Vec<usize>,
        allowed: impl IntoIterator<Item = Vec<Value>>,
    ) -> Result<Self, TargetError> {
        if coords.is_empty() || coords.len() > closure::MAX_WIDTH {
            return Err(TargetError::Width {
                got: coords.len(),
                max: closure::MAX_WIDTH,
            });
        }
        let mut set = BTreeSet::new();
        for tuple in allowed {
            if tuple.len() != coords.len() {
                return Err(TargetError::TupleLength {
                    got: tuple.len(),
                    expected: coords.len(),
                    tuple,
                });
            }
            set.insert(tuple);
        }
        Ok(ProjectionTarget {
            coords,
            allowed: set,
        })
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Accepted tuples in ascending lexicographic order.
    pub fn allowed(&self) -> impl Iterator<Item = &[Value]> {
        self.allowed.iter().map(|t| t.as_slice())
    }
}

/// Result of a solve: a verified solution or a checkable emptiness trace.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Sat(AssignmentMap),
    Unsat(Trace),
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }
}

/// Why a solve refused to run.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("operation is not valid for this solver: {0}")]
    InvalidAlgebra(#[from] AlgebraError),
    #[error("instance is not preserved by the operation: {0}")]
    IncompatibleAlgebra(#[from] CompatibilityError),
}

/// Searches the closure of the represented family for an allowed tuple.
///
/// Tuples are tried in ascending order; the returned map is the closure's
/// first witness of the first reachable one, so equal inputs yield equal
/// witnesses. `None` means no allowed tuple is a projection of any map the
/// family generates.
pub fn nonempty(
    rep: &CompactRepresentation,
    target: &ProjectionTarget,
    op: &OperationTable,
) -> Option<AssignmentMap> {
    let arena = rep.arena();
    let seeds: Vec<&AssignmentMap> = rep
        .first_occurrence_ids()
        .iter()
        .map(|&id| &arena[id as usize])
        .collect();
    if seeds.is_empty() {
        return None;
    }
    let cl = closure::Closure::close(&seeds, target.coords(), op);
    target
        .allowed()
        .find_map(|tuple| cl.lookup(tuple))
        .cloned()
}

/// Restricts the represented family to maps that carry `prefix[..len]`,
/// returning a representation of the restricted family (empty when the
/// prefix is not realized). The result keeps the input's mode, including
/// its projection keys.
pub fn fixvalues(
    rep: &CompactRepresentation,
    prefix: &AssignmentMap,
    len: usize,
    op: &OperationTable,
) -> CompactRepresentation {
    let view = family::RepView::build(rep);
    family::restrict(&view, op, prefix, len).into_representation(rep.mode())
}

/// A set of values `0..=255` as a 256-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct ValueSet {
    bits: [u64; 4],
}

impl ValueSet {
    pub(crate) fn new() -> Self {
        ValueSet::default()
    }

    pub(crate) fn insert(&mut self, v: Value) {
        self.bits[(v >> 6) as usize] |= 1 << (v & 63);
    }

    #[cfg(test)]
    pub(crate) fn contains(&self, v: Value) -> bool {
        self.bits[(v >> 6) as usize] & (1 << (v & 63)) != 0
    }

    pub(crate) fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub(crate) fn single(&self) -> Option<Value> {
        let mut found = None;
        for (word, &bits) in self.bits.iter().enumerate() {
            if bits == 0 {
                continue;
            }
            if found.is_some() || bits & (bits - 1) != 0 {
                return None;
            }
            found = Some((word * 64 + bits.trailing_zeros() as usize) as Value);
        }
        found
    }

    /// Values in ascending order.
    pub(crate) fn iter(&self) -> ValueSetIter {
        ValueSetIter {
            bits: self.bits,
            word: 0,
        }
    }
}

pub(crate) struct ValueSetIter {
    bits: [u64; 4],
    word: usize,
}

impl Iterator for ValueSetIter {
    type Item = Value;

    fn next(&mut self) -> Option<Value> {
        while self.word < 4 {
            let bits = self.bits[self.word];
            if bits != 0 {
                self.bits[self.word] = bits & (bits - 1);
                return Some((self.word * 64 + bits.trailing_zeros() as usize) as Value);
            }
            self.word += 1;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_target_shape() {
        let t = ProjectionTarget::new(vec![0, 1, 0], vec![vec![1, 0, 1], vec![0, 0, 0]]).unwrap();
        assert_eq!(t.coords(), &[0, 1, 0]);
        let allowed: Vec<_> = t.allowed().collect();
        assert_eq!(allowed, vec![&[0, 0, 0][..], &[1, 0, 1][..]]);
        assert!(ProjectionTarget::new(vec![], vec![]).is_err());
        assert!(ProjectionTarget::new(vec![0], vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn value_set_basics() {
        let mut s = ValueSet::new();
        assert!(s.is_empty());
        s.insert(3);
        s.insert(200);
        s.insert(3);
        assert_eq!(s.len(), 2);
        assert!(s.contains(3) && s.contains(200) && !s.contains(4));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3, 200]);
        assert_eq!(s.single(), None);
        let mut one = ValueSet::new();
        one.insert(7);
        assert_eq!(one.single(), Some(7));
    }
}
