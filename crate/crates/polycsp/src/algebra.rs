//! Finite operation tables and the polymorphism conditions the solvers rely on.
//!
//! An [`OperationTable`] is a total `arity`-ary operation on `{0, .., q-1}`,
//! stored as a dense row-major table. [`validate_maltsev`] checks the Mal'tsev
//! identities `op(x, y, y) = op(y, y, x) = x`; [`validate_gmm`] checks the
//! generalized majority-minority condition and classifies every unordered
//! pair of values as [`PairKind::Majority`] or [`PairKind::Minority`].

use serde::{Deserialize, Serialize};

use crate::instance::AssignmentMap;

/// A domain element. Domains are subsets of `{0, .., q-1}` with `q <= 256`.
pub type Value = u8;

/// Errors from table construction, validation, and pointwise application.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("operation table has {got} entries, expected {expected} (q = {q}, arity = {arity})")]
    TableSize {
        q: usize,
        arity: usize,
        expected: usize,
        got: usize,
    },
    #[error("table entry {value} at index {index} is outside the domain 0..{q}")]
    EntryRange { index: usize, value: Value, q: usize },
    #[error("expected arity {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("not a Mal'tsev operation: op{triple:?} = {got}, expected {expected}")]
    NotMaltsev {
        triple: (Value, Value, Value),
        got: Value,
        expected: Value,
    },
    #[error("not idempotent: op({value}, .., {value}) != {value}")]
    NotIdempotent { value: Value },
    #[error("pair ({a}, {b}) is neither majority nor minority")]
    NotGmm { a: Value, b: Value },
    #[error("assignment maps have mismatched lengths {lens:?}")]
    LengthMismatch { lens: Vec<usize> },
}

/// A total operation `{0, .., q-1}^arity -> {0, .., q-1}` as a dense table.
///
/// Entry for arguments `(a_0, .., a_{r-1})` lives at row-major index
/// `a_0 * q^{r-1} + .. + a_{r-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperationTable {
    q: usize,
    arity: usize,
    table: Vec<Value>,
}

#[derive(Deserialize)]
struct RawOperationTable {
    q: usize,
    arity: usize,
    table: Vec<Value>,
}

impl OperationTable {
    /// Builds a table, checking the entry count and that every entry is `< q`.
    pub fn new(q: usize, arity: usize, table: Vec<Value>) -> Result<Self, AlgebraError> {
        let expected = q.checked_pow(arity as u32).ok_or(AlgebraError::TableSize {
            q,
            arity,
            expected: usize::MAX,
            got: table.len(),
        })?;
        if table.len() != expected {
            return Err(AlgebraError::TableSize {
                q,
                arity,
                expected,
                got: table.len(),
            });
        }
        if let Some((index, &value)) = table
            .iter()
            .enumerate()
            .find(|(_, &v)| (v as usize) >= q)
        {
            return Err(AlgebraError::EntryRange { index, value, q });
        }
        Ok(OperationTable { q, arity, table })
    }

    /// The affine Mal'tsev operation `x - y + z mod q`.
    pub fn affine_maltsev(q: usize) -> Self {
        let mut table = Vec::with_capacity(q * q * q);
        for x in 0..q {
            for y in 0..q {
                for z in 0..q {
                    table.push(((x + q - y + z) % q) as Value);
                }
            }
        }
        OperationTable {
            q,
            arity: 3,
            table,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn table(&self) -> &[Value] {
        &self.table
    }

    /// Applies the operation. Panics if `args.len() != arity` or a value is `>= q`.
    #[inline]
    pub fn eval(&self, args: &[Value]) -> Value {
        debug_assert_eq!(args.len(), self.arity);
        let mut idx = 0usize;
        for &a in args {
            debug_assert!((a as usize) < self.q);
            idx = idx * self.q + a as usize;
        }
        self.table[idx]
    }

    /// Ternary fast path used throughout the Mal'tsev solver.
    #[inline]
    pub fn eval3(&self, x: Value, y: Value, z: Value) -> Value {
        debug_assert_eq!(self.arity, 3);
        self.table[(x as usize * self.q + y as usize) * self.q + z as usize]
    }

    /// Parses the JSON form `{"q": .., "arity": .., "table": [..]}`.
    pub fn from_json_str(text: &str) -> Result<Self, String> {
        let raw: RawOperationTable =
            serde_json::from_str(text).map_err(|e| format!("invalid algebra JSON: {e}"))?;
        OperationTable::new(raw.q, raw.arity, raw.table).map_err(|e| e.to_string())
    }

    /// Canonical JSON serialization; byte-identical across runs.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("operation table serializes")
    }
}

/// How an unordered pair of values behaves under a GMM operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    /// Every one-discrepancy application returns the repeated value.
    Majority,
    /// Applications with the discrepancy first or last return the lone value.
    Minority,
}

/// Pair classification produced by [`validate_gmm`].
///
/// Reflexive pairs `{a, a}` are classified `Minority` by convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairClassification {
    q: usize,
    /// `kinds[a * q + b]` for all ordered `(a, b)`; symmetric.
    kinds: Vec<PairKind>,
}

impl PairClassification {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn kind(&self, a: Value, b: Value) -> PairKind {
        self.kinds[a as usize * self.q + b as usize]
    }

    pub fn is_minority(&self, a: Value, b: Value) -> bool {
        self.kind(a, b) == PairKind::Minority
    }
}

/// Checks the Mal'tsev identities `op(a, b, b) = a` and `op(b, b, a) = a`.
///
/// Pairs `(a, b)` are scanned in lexicographic order, the `(a, b, b)` pattern
/// before `(b, b, a)`; the first violated triple is reported.
pub fn validate_maltsev(op: &OperationTable) -> Result<(), AlgebraError> {
    if op.arity != 3 {
        return Err(AlgebraError::ArityMismatch {
            expected: 3,
            got: op.arity,
        });
    }
    let q = op.q as Value;
    for a in 0..q {
        for b in 0..q {
            let got = op.eval3(a, b, b);
            if got != a {
                return Err(AlgebraError::NotMaltsev {
                    triple: (a, b, b),
                    got,
                    expected: a,
                });
            }
            let got = op.eval3(b, b, a);
            if got != a {
                return Err(AlgebraError::NotMaltsev {
                    triple: (b, b, a),
                    got,
                    expected: a,
                });
            }
        }
    }
    Ok(())
}

/// Whether `op(a, .., a) = a` for every value.
pub fn is_idempotent(op: &OperationTable) -> bool {
    (0..op.q as Value).all(|a| op.eval(&vec![a; op.arity]) == a)
}

/// Checks the generalized majority-minority condition for a `(k+1)`-ary table
/// with `k >= 2` and classifies every unordered pair.
///
/// A pair `{a, b}` is majority when every application to arguments from
/// `{a, b}` with a single discrepancy returns the repeated value, and minority
/// when applications with the discrepancy in the first or last position return
/// the lone value. Pairs satisfying neither are rejected.
pub fn validate_gmm(op: &OperationTable) -> Result<PairClassification, AlgebraError> {
    if op.arity < 3 {
        return Err(AlgebraError::ArityMismatch {
            expected: 3,
            got: op.arity,
        });
    }
    if let Some(a) = (0..op.q as Value).find(|&a| op.eval(&vec![a; op.arity]) != a) {
        return Err(AlgebraError::NotIdempotent { value: a });
    }
    let q = op.q;
    let mut kinds = vec![PairKind::Minority; q * q];
    let mut args = vec![0 as Value; op.arity];
    for a in 0..q as Value {
        for b in (a + 1)..q as Value {
            let mut majority = true;
            'maj: for (x, y) in [(a, b), (b, a)] {
                for p in 0..op.arity {
                    args.fill(x);
                    args[p] = y;
                    if op.eval(&args) != x {
                        majority = false;
                        break 'maj;
                    }
                }
            }
            let kind = if majority {
                PairKind::Majority
            } else {
                let minority = [(a, b), (b, a)].into_iter().all(|(x, y)| {
                    args.fill(x);
                    args[0] = y;
                    let first = op.eval(&args);
                    args.fill(x);
                    args[op.arity - 1] = y;
                    let last = op.eval(&args);
                    first == y && last == y
                });
                if !minority {
                    return Err(AlgebraError::NotGmm { a, b });
                }
                PairKind::Minority
            };
            kinds[a as usize * q + b as usize] = kind;
            kinds[b as usize * q + a as usize] = kind;
        }
    }
    Ok(PairClassification { q, kinds })
}

/// Whether `op` applied componentwise to any `arity` pairs of `rel` lands in `rel`.
pub fn preserves_binary(op: &OperationTable, rel: &[(Value, Value)]) -> bool {
    binary_violation(op, rel).is_none()
}

/// A componentwise application escaping a relation: the argument pairs and
/// the pair they produce.
pub type BinaryViolation = (Vec<(Value, Value)>, (Value, Value));

/// First componentwise application of `op` escaping `rel`, with its arguments,
/// scanning argument tuples in lexicographic order over `rel`'s pair order.
pub fn binary_violation(
    op: &OperationTable,
    rel: &[(Value, Value)],
) -> Option<BinaryViolation> {
    let r = op.arity;
    let mut idx = vec![0usize; r];
    if rel.is_empty() {
        return None;
    }
    loop {
        // Componentwise evaluation via row-major indexing on both coordinates.
        let mut ix = rel[idx[0]].0 as usize;
        let mut iy = rel[idx[0]].1 as usize;
        for &j in &idx[1..] {
            ix = ix * op.q + rel[j].0 as usize;
            iy = iy * op.q + rel[j].1 as usize;
        }
        let x = op.table[ix];
        let y = op.table[iy];
        if !rel.contains(&(x, y)) {
            let args = idx.iter().map(|&j| rel[j]).collect();
            return Some((args, (x, y)));
        }
        // Advance odometer.
        let mut p = r;
        loop {
            if p == 0 {
                return None;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < rel.len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Whether `op` applied to any `arity` values of `set` lands in `set`.
pub fn preserves_unary(op: &OperationTable, set: &[Value]) -> bool {
    if set.is_empty() {
        return true;
    }
    let r = op.arity;
    let mut idx = vec![0usize; r];
    loop {
        let mut ix = set[idx[0]] as usize;
        for &j in &idx[1..] {
            ix = ix * op.q + set[j] as usize;
        }
        if !set.contains(&op.table[ix]) {
            return false;
        }
        let mut p = r;
        loop {
            if p == 0 {
                return true;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < set.len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// Applies `op` componentwise to `arity` assignment maps of equal length.
pub fn apply_pointwise(
    op: &OperationTable,
    maps: &[&AssignmentMap],
) -> Result<AssignmentMap, AlgebraError> {
    if maps.len() != op.arity {
        return Err(AlgebraError::ArityMismatch {
            expected: op.arity,
            got: maps.len(),
        });
    }
    let n = maps[0].len();
    if maps.iter().any(|m| m.len() != n) {
        return Err(AlgebraError::LengthMismatch {
            lens: maps.iter().map(|m| m.len()).collect(),
        });
    }
    let mut out = Vec::with_capacity(n);
    let mut args = vec![0 as Value; op.arity];
    for i in 0..n {
        for (slot, m) in args.iter_mut().zip(maps) {
            *slot = m.get(i);
        }
        out.push(op.eval(&args));
    }
    Ok(AssignmentMap::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn majority2() -> OperationTable {
        // Ternary majority on {0, 1}.
        let table: Vec<Value> = (0..8)
            .map(|i| {
                let (x, y, z) = ((i >> 2) & 1, (i >> 1) & 1, i & 1);
                if x + y + z >= 2 {
                    1
                } else {
                    0
                }
            })
            .collect();
        OperationTable::new(2, 3, table).unwrap()
    }

    #[test]
    fn affine_is_maltsev() {
        for q in 1..=5 {
            let op = OperationTable::affine_maltsev(q);
            assert_eq!(validate_maltsev(&op), Ok(()));
            assert!(is_idempotent(&op));
        }
    }

    #[test]
    fn majority_rejected_at_first_triple() {
        let err = validate_maltsev(&majority2()).unwrap_err();
        assert_eq!(
            err,
            AlgebraError::NotMaltsev {
                triple: (0, 1, 1),
                got: 1,
                expected: 0,
            }
        );
    }

    #[test]
    fn wrong_arity_rejected() {
        let op = OperationTable::new(2, 2, vec![0, 0, 0, 1]).unwrap();
        assert_eq!(
            validate_maltsev(&op),
            Err(AlgebraError::ArityMismatch {
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn table_construction_validates() {
        assert_eq!(
            OperationTable::new(2, 3, vec![0; 7]),
            Err(AlgebraError::TableSize {
                q: 2,
                arity: 3,
                expected: 8,
                got: 7
            })
        );
        assert_eq!(
            OperationTable::new(2, 3, vec![0, 0, 0, 0, 0, 0, 0, 2]),
            Err(AlgebraError::EntryRange {
                index: 7,
                value: 2,
                q: 2
            })
        );
    }

    #[test]
    fn maltsev_pairs_classify_minority() {
        for q in 2..=4 {
            let op = OperationTable::affine_maltsev(q);
            let class = validate_gmm(&op).unwrap();
            for a in 0..q as Value {
                for b in 0..q as Value {
                    assert_eq!(class.kind(a, b), PairKind::Minority);
                }
            }
        }
    }

    #[test]
    fn majority_pairs_classify_majority() {
        let class = validate_gmm(&majority2()).unwrap();
        assert_eq!(class.kind(0, 1), PairKind::Majority);
        assert_eq!(class.kind(1, 0), PairKind::Majority);
        // Reflexive pairs are minority by convention.
        assert_eq!(class.kind(0, 0), PairKind::Minority);
    }

    #[test]
    fn mixed_pair_rejected() {
        // op(0,1,1) = 0 (minority-like first position for the pair {0,1})
        // but op(1,1,0) = 1 breaks both behaviors.
        let table = vec![0, 1, 0, 0, 1, 1, 1, 1];
        let op = OperationTable::new(2, 3, table).unwrap();
        assert_eq!(
            validate_gmm(&op),
            Err(AlgebraError::NotGmm { a: 0, b: 1 })
        );
    }

    #[test]
    fn non_idempotent_rejected() {
        let mut table = OperationTable::affine_maltsev(2).table().to_vec();
        table[0] = 1; // op(0,0,0) = 1
        let op = OperationTable::new(2, 3, table).unwrap();
        assert_eq!(validate_gmm(&op), Err(AlgebraError::NotIdempotent { value: 0 }));
    }

    #[test]
    fn pointwise_application_mod3() {
        let op = OperationTable::affine_maltsev(3);
        let m1 = AssignmentMap::new(vec![1, 2]);
        let m2 = AssignmentMap::new(vec![0, 1]);
        let m3 = AssignmentMap::new(vec![2, 0]);
        let out = apply_pointwise(&op, &[&m1, &m2, &m3]).unwrap();
        assert_eq!(out.values(), &[0, 1]);
    }

    #[test]
    fn pointwise_length_mismatch() {
        let op = OperationTable::affine_maltsev(2);
        let m1 = AssignmentMap::new(vec![0, 1]);
        let m2 = AssignmentMap::new(vec![0]);
        assert_eq!(
            apply_pointwise(&op, &[&m1, &m2, &m1]),
            Err(AlgebraError::LengthMismatch { lens: vec![2, 1, 2] })
        );
    }

    #[test]
    fn binary_preservation_examples() {
        let op = OperationTable::affine_maltsev(2);
        // Implication-style relation is not preserved; equality is.
        let rel = [(0, 0), (0, 1), (1, 1)];
        let (args, out) = binary_violation(&op, &rel).unwrap();
        assert_eq!(args, vec![(0, 0), (0, 1), (1, 1)]);
        assert_eq!(out, (1, 0));
        assert!(!preserves_binary(&op, &rel));
        assert!(preserves_binary(&op, &[(0, 0), (1, 1)]));
        assert!(preserves_binary(&op, &[(0, 1), (1, 0)]));
        assert!(preserves_binary(&op, &[]));
    }

    #[test]
    fn unary_preservation_examples() {
        let op = OperationTable::affine_maltsev(3);
        // {0, 1} is not closed under x - y + z mod 3: 0 - 1 + 0 = 2.
        assert!(!preserves_unary(&op, &[0, 1]));
        assert!(preserves_unary(&op, &[0, 1, 2]));
        assert!(preserves_unary(&op, &[1]));
        assert!(preserves_unary(&op, &[]));
    }

    #[test]
    fn json_round_trip() {
        let op = OperationTable::affine_maltsev(2);
        let text = op.to_canonical_json();
        assert_eq!(
            text,
            r#"{"q":2,"arity":3,"table":[0,1,1,0,1,0,0,1]}"#
        );
        assert_eq!(OperationTable::from_json_str(&text).unwrap(), op);
        assert!(OperationTable::from_json_str("{\"q\":2,\"arity\":3,\"table\":[0]}").is_err());
    }

    /// Random Mal'tsev table: entries pinned by the identities are fixed, the
    /// rest drawn freely. Every such table satisfies the identities.
    pub(crate) fn arb_maltsev(q: usize) -> impl Strategy<Value = OperationTable> {
        let free = q * q * q;
        proptest::collection::vec(0..q as Value, free).prop_map(move |rand| {
            let mut table = vec![0 as Value; q * q * q];
            for x in 0..q {
                for y in 0..q {
                    for z in 0..q {
                        let idx = (x * q + y) * q + z;
                        table[idx] = if y == z {
                            x as Value
                        } else if x == y {
                            z as Value
                        } else {
                            rand[idx]
                        };
                    }
                }
            }
            OperationTable::new(q, 3, table).unwrap()
        })
    }

    proptest! {
        #[test]
        fn random_maltsev_tables_validate(op in (2usize..=4).prop_flat_map(arb_maltsev)) {
            prop_assert_eq!(validate_maltsev(&op), Ok(()));
            prop_assert!(is_idempotent(&op));
            // Every Mal'tsev operation is a GMM operation with all pairs minority.
            let class = validate_gmm(&op).unwrap();
            for a in 0..op.q() as Value {
                for b in 0..op.q() as Value {
                    prop_assert_eq!(class.kind(a, b), PairKind::Minority);
                }
            }
        }

        #[test]
        fn maltsev_identities_lift_pointwise(
            op in (2usize..=4).prop_flat_map(arb_maltsev),
            seed in proptest::collection::vec(0u8..4, 1..8),
        ) {
            let q = op.q() as Value;
            let h1 = AssignmentMap::new(seed.iter().map(|v| v % q).collect());
            let h2 = AssignmentMap::new(seed.iter().map(|v| (v + 1) % q).collect());
            prop_assert_eq!(apply_pointwise(&op, &[&h1, &h2, &h2]).unwrap(), h1.clone());
            prop_assert_eq!(apply_pointwise(&op, &[&h2, &h2, &h1]).unwrap(), h1);
        }

        #[test]
        fn full_square_always_preserved(op in (2usize..=3).prop_flat_map(arb_maltsev)) {
            let q = op.q() as Value;
            let mut rel = Vec::new();
            for a in 0..q {
                for b in 0..q {
                    rel.push((a, b));
                }
            }
            prop_assert!(preserves_binary(&op, &rel));
        }
    }
}
