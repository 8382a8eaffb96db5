//! Compact representations: small witness families standing in for huge solution sets.
//!
//! The solvers never enumerate the solution set `S_l` of an edge prefix.
//! They maintain a [`CompactRepresentation`]: a map from [`WitnessKey`]s to
//! concrete solutions. A signature key `(i, a, b)` is present exactly when
//! two solutions agree below variable `i` and take values `a` and `b` there;
//! the stored witness takes value `a` at `i`, and its partner at `(i, b, a)`
//! agrees with it below `i`. Under a Mal'tsev polymorphism such a family
//! generates all of `S_l`, which is what makes the representation "compact":
//! its size is polynomial while `S_l` may be exponential.
//!
//! Generalized majority-minority mode (`Gmm { k }`) keeps signature keys only
//! for minority pairs and additionally stores one witness per reachable
//! projection tuple on every coordinate set of size at most `k`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::algebra::Value;
use crate::instance::{AssignmentMap, Instance};

/// The set of signature triples `(i, a, b)` of a solution set.
pub type SignatureSet = BTreeSet<(usize, Value, Value)>;

/// Index of a stored witness: a signature triple or a projection tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WitnessKey {
    /// Witnesses value `a` at variable `i`, paired with `(i, b, a)`.
    Sig { i: usize, a: Value, b: Value },
    /// Witnesses the value tuple `vals` on the coordinate set `coords`.
    Proj {
        #[serde(rename = "I")]
        coords: Vec<usize>,
        vals: Vec<Value>,
    },
}

/// Which witness family the representation maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepMode {
    Maltsev,
    Gmm { k: usize },
}

/// Errors from initialization and structural validation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepresentationError {
    #[error("variable {var} has an empty domain")]
    EmptyDomain { var: usize },
    #[error("malformed representation at {key:?}: {reason}")]
    MalformedRepresentation { key: WitnessKey, reason: String },
}

/// A keyed family of witness solutions with deduplicated map storage.
///
/// Witness maps are interned: equal maps share one arena slot, so iterating
/// distinct maps is cheap even when many keys share a witness. Equality
/// compares keys and map contents, not arena layout.
#[derive(Debug, Clone)]
pub struct CompactRepresentation {
    mode: RepMode,
    n: usize,
    q: usize,
    store: BTreeMap<WitnessKey, u32>,
    maps: Vec<AssignmentMap>,
    dedup: HashMap<AssignmentMap, u32>,
}

impl CompactRepresentation {
    pub fn new(mode: RepMode, n: usize, q: usize) -> Self {
        CompactRepresentation {
            mode,
            n,
            q,
            store: BTreeMap::new(),
            maps: Vec::new(),
            dedup: HashMap::new(),
        }
    }

    pub fn mode(&self) -> RepMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Stores `map` at `key`, interning the map contents.
    pub fn insert(&mut self, key: WitnessKey, map: AssignmentMap) {
        assert_eq!(map.len(), self.n, "witness length must match variable count");
        let id = match self.dedup.get(&map) {
            Some(&id) => id,
            None => {
                let id = self.maps.len() as u32;
                self.maps.push(map.clone());
                self.dedup.insert(map, id);
                id
            }
        };
        self.store.insert(key, id);
    }

    pub fn get(&self, key: &WitnessKey) -> Option<&AssignmentMap> {
        self.store.get(key).map(|&id| &self.maps[id as usize])
    }

    pub fn contains_key(&self, key: &WitnessKey) -> bool {
        self.store.contains_key(key)
    }

    /// No keys stored; the represented solution set is empty.
    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn key_count(&self) -> usize {
        self.store.len()
    }

    pub fn distinct_map_count(&self) -> usize {
        self.maps.len()
    }

    /// Entries in ascending key order.
    pub fn iter(&self) -> impl Iterator<Item = (&WitnessKey, &AssignmentMap)> {
        self.store
            .iter()
            .map(|(k, &id)| (k, &self.maps[id as usize]))
    }

    /// The witness at the smallest key; a concrete solution when nonempty.
    pub fn first_witness(&self) -> Option<&AssignmentMap> {
        self.iter().next().map(|(_, m)| m)
    }

    pub(crate) fn arena(&self) -> &[AssignmentMap] {
        &self.maps
    }

    pub(crate) fn store_ids(&self) -> impl Iterator<Item = (&WitnessKey, u32)> {
        self.store.iter().map(|(k, &id)| (k, id))
    }

    /// Arena ids of distinct maps, ordered by first occurrence over sorted keys.
    /// This is the canonical seed order for closure computations.
    pub(crate) fn first_occurrence_ids(&self) -> Vec<u32> {
        let mut seen = vec![false; self.maps.len()];
        let mut out = Vec::new();
        for &id in self.store.values() {
            if !seen[id as usize] {
                seen[id as usize] = true;
                out.push(id);
            }
        }
        out
    }

    /// The signature triples of the stored family, validating structure.
    ///
    /// Every signature key must store a witness of the right length taking
    /// value `a` at `i`, its partner key `(i, b, a)` must be present, and the
    /// two witnesses must agree below `i`. Projection keys must match the
    /// mode, have strictly increasing coordinates of size `1..=k`, and store
    /// a witness projecting onto the recorded tuple.
    pub fn signature_of(&self) -> Result<SignatureSet, RepresentationError> {
        let malformed = |key: &WitnessKey, reason: String| {
            Err(RepresentationError::MalformedRepresentation {
                key: key.clone(),
                reason,
            })
        };
        let mut sig = SignatureSet::new();
        for (key, map) in self.iter() {
            if map.len() != self.n {
                return malformed(key, format!("witness length {} != n = {}", map.len(), self.n));
            }
            match key {
                WitnessKey::Sig { i, a, b } => {
                    if map.get(*i) != *a {
                        return malformed(
                            key,
                            format!("witness takes value {} at {}, key says {}", map.get(*i), i, a),
                        );
                    }
                    let partner_key = WitnessKey::Sig {
                        i: *i,
                        a: *b,
                        b: *a,
                    };
                    let Some(partner) = self.get(&partner_key) else {
                        return malformed(key, format!("partner key {partner_key:?} missing"));
                    };
                    if (0..*i).any(|c| map.get(c) != partner.get(c)) {
                        return malformed(key, "witness and partner disagree below i".to_string());
                    }
                    sig.insert((*i, *a, *b));
                }
                WitnessKey::Proj { coords, vals } => {
                    let RepMode::Gmm { k } = self.mode else {
                        return malformed(key, "projection key outside gmm mode".to_string());
                    };
                    if coords.is_empty() || coords.len() > k {
                        return malformed(key, format!("coordinate set size not in 1..={k}"));
                    }
                    if coords.windows(2).any(|w| w[0] >= w[1]) || coords.iter().any(|&c| c >= self.n)
                    {
                        return malformed(key, "coordinates not strictly increasing in range".to_string());
                    }
                    if vals.len() != coords.len() {
                        return malformed(key, "value tuple length != coordinate count".to_string());
                    }
                    if coords.iter().zip(vals).any(|(&c, &v)| map.get(c) != v) {
                        return malformed(key, "witness does not project onto the tuple".to_string());
                    }
                }
            }
        }
        Ok(sig)
    }
}

impl PartialEq for CompactRepresentation {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode
            && self.n == other.n
            && self.q == other.q
            && self.store.len() == other.store.len()
            && self.iter().zip(other.iter()).all(|((k1, m1), (k2, m2))| k1 == k2 && m1 == m2)
    }
}

impl Eq for CompactRepresentation {}

#[derive(Serialize)]
struct RepWireRef<'a> {
    mode: RepMode,
    n: usize,
    q: usize,
    entries: Vec<(&'a WitnessKey, &'a AssignmentMap)>,
}

#[derive(Deserialize)]
struct RepWire {
    mode: RepMode,
    n: usize,
    q: usize,
    entries: Vec<(WitnessKey, AssignmentMap)>,
}

impl Serialize for CompactRepresentation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RepWireRef {
            mode: self.mode,
            n: self.n,
            q: self.q,
            entries: self.iter().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CompactRepresentation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = RepWire::deserialize(deserializer)?;
        let mut rep = CompactRepresentation::new(wire.mode, wire.n, wire.q);
        for (key, map) in wire.entries {
            if map.len() != wire.n {
                return Err(serde::de::Error::custom(format!(
                    "witness of length {} in a representation over {} variables",
                    map.len(),
                    wire.n
                )));
            }
            rep.insert(key, map);
        }
        Ok(rep)
    }
}

/// The signature triples of an explicit solution list.
pub fn signature_of_solutions(solutions: &[AssignmentMap], n: usize) -> SignatureSet {
    let mut sols: Vec<&AssignmentMap> = solutions.iter().collect();
    sols.sort();
    sols.dedup();
    let mut sig = SignatureSet::new();
    for i in 0..n {
        // Lexicographic order makes equal-prefix groups contiguous.
        let mut sorted: Vec<&AssignmentMap> = sols.clone();
        sorted.sort_by(|x, y| x.values()[..i].cmp(&y.values()[..i]).then(x.cmp(y)));
        let mut start = 0;
        while start < sorted.len() {
            let mut end = start;
            while end < sorted.len()
                && sorted[end].values()[..i] == sorted[start].values()[..i]
            {
                end += 1;
            }
            let mut vals: Vec<Value> = sorted[start..end].iter().map(|m| m.get(i)).collect();
            vals.sort_unstable();
            vals.dedup();
            for &a in &vals {
                for &b in &vals {
                    sig.insert((i, a, b));
                }
            }
            start = end;
        }
    }
    sig
}

/// Distinct projections of `solutions` onto `coords` (repeats allowed).
pub fn projections_of_solutions(
    solutions: &[AssignmentMap],
    coords: &[usize],
) -> BTreeSet<Vec<Value>> {
    solutions
        .iter()
        .map(|m| coords.iter().map(|&c| m.get(c)).collect())
        .collect()
}

/// How a representation can fail validation against an explicit solution list.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error(transparent)]
    Malformed(#[from] RepresentationError),
    #[error("witness at {key:?} is not a solution")]
    StoredMapNotSolution { key: WitnessKey },
    #[error("signature mismatch: missing {missing:?}, extra {extra:?}")]
    SignatureMismatch {
        missing: Vec<(usize, Value, Value)>,
        extra: Vec<(usize, Value, Value)>,
    },
    #[error("projection mismatch on {coords:?}: missing {missing:?}, extra {extra:?}")]
    ProjectionMismatch {
        coords: Vec<usize>,
        missing: Vec<Vec<Value>>,
        extra: Vec<Vec<Value>>,
    },
}

/// Validates a representation against the full solution list it should represent.
///
/// Checks that every stored witness is a solution, that the signature keys
/// reproduce the solutions' signature exactly (restricted to `minority`
/// pairs; pass `|_, _| true` in Mal'tsev mode), and in GMM mode that the
/// projection keys cover exactly the reachable tuples on every coordinate
/// set of size `1..=k`.
pub fn validate_against_solutions(
    rep: &CompactRepresentation,
    solutions: &[AssignmentMap],
    minority: impl Fn(Value, Value) -> bool,
) -> Result<(), ValidationError> {
    let rep_sig = rep.signature_of()?;
    let sol_set: HashSet<&AssignmentMap> = solutions.iter().collect();
    for (key, map) in rep.iter() {
        if !sol_set.contains(map) {
            return Err(ValidationError::StoredMapNotSolution { key: key.clone() });
        }
    }
    let expected: SignatureSet = signature_of_solutions(solutions, rep.n())
        .into_iter()
        .filter(|&(_, a, b)| minority(a, b))
        .collect();
    if rep_sig != expected {
        return Err(ValidationError::SignatureMismatch {
            missing: expected.difference(&rep_sig).copied().collect(),
            extra: rep_sig.difference(&expected).copied().collect(),
        });
    }
    if let RepMode::Gmm { k } = rep.mode() {
        let mut by_coords: BTreeMap<Vec<usize>, BTreeSet<Vec<Value>>> = BTreeMap::new();
        for (key, _) in rep.iter() {
            if let WitnessKey::Proj { coords, vals } = key {
                by_coords.entry(coords.clone()).or_default().insert(vals.clone());
            }
        }
        for coords in coordinate_sets(rep.n(), k) {
            let truth = projections_of_solutions(solutions, &coords);
            let stored = by_coords.remove(&coords).unwrap_or_default();
            if truth != stored {
                return Err(ValidationError::ProjectionMismatch {
                    missing: truth.difference(&stored).cloned().collect(),
                    extra: stored.difference(&truth).cloned().collect(),
                    coords,
                });
            }
        }
        if let Some((coords, _)) = by_coords.into_iter().next() {
            return Err(ValidationError::ProjectionMismatch {
                coords,
                missing: vec![],
                extra: vec![],
            });
        }
    }
    Ok(())
}

/// Strictly increasing coordinate sets of size `1..=k`, in ascending order.
pub fn coordinate_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == k {
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(n, k, c + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out.sort_by(|x, y| (x.len(), x.as_slice()).cmp(&(y.len(), y.as_slice())));
    out
}

/// Upper bound on stored keys for a representation of the given shape.
pub fn size_bound(n: usize, q: usize, mode: RepMode) -> usize {
    let sig = 2 * n * q * q;
    match mode {
        RepMode::Maltsev => sig,
        RepMode::Gmm { k } => {
            let mut total = sig;
            // sum over sizes s of C(n, s) * q^s
            let mut binom = 1usize;
            for s in 1..=k.min(n) {
                binom = binom * (n - s + 1) / s;
                total += binom * q.pow(s as u32);
            }
            total
        }
    }
}

/// The base witness: every variable at its smallest domain value.
fn base_map(inst: &Instance) -> Result<AssignmentMap, RepresentationError> {
    let mut vals = Vec::with_capacity(inst.n());
    for var in 0..inst.n() {
        match inst.domain(var).first() {
            Some(&v) => vals.push(v),
            None => return Err(RepresentationError::EmptyDomain { var }),
        }
    }
    Ok(AssignmentMap::new(vals))
}

/// The representation of the edge-free prefix: all domain products.
///
/// For every variable `i` and values `a, b` in `D_i`, the key `(i, a, b)`
/// stores the map sending `i` to `a` and every other variable to its
/// smallest domain value.
pub fn init_representation(inst: &Instance) -> Result<CompactRepresentation, RepresentationError> {
    let base = base_map(inst)?;
    let mut rep = CompactRepresentation::new(RepMode::Maltsev, inst.n(), inst.q());
    for i in 0..inst.n() {
        for &a in inst.domain(i) {
            let mut vals = base.values().to_vec();
            vals[i] = a;
            let witness = AssignmentMap::new(vals);
            for &b in inst.domain(i) {
                rep.insert(WitnessKey::Sig { i, a, b }, witness.clone());
            }
        }
    }
    Ok(rep)
}

/// GMM-mode initial representation: minority signature keys plus one witness
/// per projection tuple on every coordinate set of size `1..=k`.
pub fn init_representation_gmm(
    inst: &Instance,
    minority: impl Fn(Value, Value) -> bool,
    k: usize,
) -> Result<CompactRepresentation, RepresentationError> {
    let base = base_map(inst)?;
    let mut rep = CompactRepresentation::new(RepMode::Gmm { k }, inst.n(), inst.q());
    for i in 0..inst.n() {
        for &a in inst.domain(i) {
            let mut vals = base.values().to_vec();
            vals[i] = a;
            let witness = AssignmentMap::new(vals);
            for &b in inst.domain(i) {
                if minority(a, b) {
                    rep.insert(WitnessKey::Sig { i, a, b }, witness.clone());
                }
            }
        }
    }
    for coords in coordinate_sets(inst.n(), k) {
        let mut tuple = vec![0usize; coords.len()];
        loop {
            let mut vals = base.values().to_vec();
            let mut proj = Vec::with_capacity(coords.len());
            for (slot, &c) in tuple.iter().zip(&coords) {
                let v = inst.domain(c)[*slot];
                vals[c] = v;
                proj.push(v);
            }
            rep.insert(
                WitnessKey::Proj {
                    coords: coords.clone(),
                    vals: proj,
                },
                AssignmentMap::new(vals),
            );
            // Odometer over the domains of `coords`.
            let mut pos = coords.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < inst.domain(coords[pos]).len() {
                    break;
                }
                tuple[pos] = 0;
            }
            if tuple.iter().all(|&t| t == 0) {
                break;
            }
        }
    }
    Ok(rep)
}
