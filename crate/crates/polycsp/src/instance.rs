//! Constraint instances: binary digraphs with per-variable domains.
//!
//! An [`Instance`] has `n` variables, a value range `{0, .., q-1}`, a domain
//! `D_i` per variable, and directed edges carrying binary relations. A
//! solution is an [`AssignmentMap`] `h` with `h(i)` in `D_i` for every
//! variable and `(h(from), h(to))` in the edge relation for every edge.
//!
//! Instances are kept normalized: domains and relation pairs sorted and
//! deduplicated, edges sorted by `(from, to)` with at most one edge per
//! ordered pair (duplicates are intersected). Serialization of a normalized
//! instance is canonical, which the certificate digests rely on.

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::{preserves_binary, preserves_unary, OperationTable, Value};

/// Errors from parsing, construction, and compatibility checks.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("invalid instance JSON: {0}")]
    Parse(String),
    #[error("n must be positive")]
    EmptyVariableSet,
    #[error("q must be positive")]
    EmptyValueRange,
    #[error("domain list has {got} entries, expected n = {expected}")]
    DomainCount { expected: usize, got: usize },
    #[error("domain value {value} of variable {var} is outside 0..{q}")]
    DomainValueRange { var: usize, value: Value, q: usize },
    #[error("relation value {value} is outside 0..{q}")]
    RelationValueRange { value: Value, q: usize },
    #[error("edge endpoints ({from}, {to}) out of range for n = {n}")]
    EdgeRange { from: usize, to: usize, n: usize },
    #[error("edge ({from}, {to}) allows pair {pair:?} outside the endpoint domains")]
    DomainViolation {
        from: usize,
        to: usize,
        pair: (Value, Value),
    },
}

/// A total assignment of values to variables `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssignmentMap(Vec<Value>);

impl AssignmentMap {
    pub fn new(values: Vec<Value>) -> Self {
        AssignmentMap(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Value {
        self.0[i]
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }
}

/// A binary relation over `{0, .., q-1}`, with O(1) membership tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    q: usize,
    pairs: Vec<(Value, Value)>,
    mask: Vec<bool>,
}

impl Relation {
    /// Builds a relation; pairs are sorted and deduplicated.
    pub fn new(q: usize, mut pairs: Vec<(Value, Value)>) -> Result<Self, InstanceError> {
        for &(a, b) in &pairs {
            for value in [a, b] {
                if value as usize >= q {
                    return Err(InstanceError::RelationValueRange { value, q });
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut mask = vec![false; q * q];
        for &(a, b) in &pairs {
            mask[a as usize * q + b as usize] = true;
        }
        Ok(Relation { q, pairs, mask })
    }

    #[inline]
    pub fn contains(&self, a: Value, b: Value) -> bool {
        self.mask[a as usize * self.q + b as usize]
    }

    pub fn pairs(&self) -> &[(Value, Value)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        let pairs = self
            .pairs
            .iter()
            .copied()
            .filter(|&(a, b)| other.contains(a, b))
            .collect();
        Relation::new(self.q, pairs).expect("intersection stays in range")
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.pairs.len()))?;
        for pair in &self.pairs {
            seq.serialize_element(pair)?;
        }
        seq.end()
    }
}

/// A directed constraint edge: `(h(from), h(to))` must lie in `rel`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub rel: Relation,
}

/// A normalized constraint instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Instance {
    n: usize,
    q: usize,
    domains: Vec<Vec<Value>>,
    edges: Vec<Edge>,
}

/// Raw edge input for [`Instance::from_parts`]: `(from, to, relation pairs)`.
pub type EdgeSpec = (usize, usize, Vec<(Value, Value)>);

#[derive(Deserialize)]
struct RawEdge {
    from: usize,
    to: usize,
    rel: Vec<(Value, Value)>,
}

#[derive(Deserialize)]
struct RawInstance {
    n: usize,
    q: usize,
    domains: Vec<Vec<Value>>,
    edges: Vec<RawEdge>,
}

impl Instance {
    /// Builds a normalized instance from raw parts.
    ///
    /// Domains are sorted and deduplicated; relation pairs likewise. Relation
    /// pairs must lie inside the endpoint domains. Multiple edges on the same
    /// ordered pair are intersected, and edges end up sorted by `(from, to)`.
    pub fn from_parts(
        n: usize,
        q: usize,
        domains: Vec<Vec<Value>>,
        edges: Vec<EdgeSpec>,
    ) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::EmptyVariableSet);
        }
        if q == 0 {
            return Err(InstanceError::EmptyValueRange);
        }
        if domains.len() != n {
            return Err(InstanceError::DomainCount {
                expected: n,
                got: domains.len(),
            });
        }
        let mut domains = domains;
        for (var, dom) in domains.iter_mut().enumerate() {
            if let Some(&value) = dom.iter().find(|&&v| v as usize >= q) {
                return Err(InstanceError::DomainValueRange { var, value, q });
            }
            dom.sort_unstable();
            dom.dedup();
        }
        let mut normalized: Vec<Edge> = Vec::new();
        for (from, to, pairs) in edges {
            if from >= n || to >= n {
                return Err(InstanceError::EdgeRange { from, to, n });
            }
            let rel = Relation::new(q, pairs)?;
            for &(a, b) in rel.pairs() {
                if domains[from].binary_search(&a).is_err()
                    || domains[to].binary_search(&b).is_err()
                {
                    return Err(InstanceError::DomainViolation {
                        from,
                        to,
                        pair: (a, b),
                    });
                }
            }
            match normalized.iter_mut().find(|e| e.from == from && e.to == to) {
                Some(existing) => existing.rel = existing.rel.intersect(&rel),
                None => normalized.push(Edge { from, to, rel }),
            }
        }
        normalized.sort_by_key(|e| (e.from, e.to));
        Ok(Instance {
            n,
            q,
            domains,
            edges: normalized,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn domains(&self) -> &[Vec<Value>] {
        &self.domains
    }

    pub fn domain(&self, var: usize) -> &[Value] {
        &self.domains[var]
    }

    pub fn domain_contains(&self, var: usize, value: Value) -> bool {
        self.domains[var].binary_search(&value).is_ok()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_empty_domain(&self) -> bool {
        self.domains.iter().any(|d| d.is_empty())
    }

    /// Whether `h` assigns every variable a domain value and satisfies every edge.
    pub fn is_homomorphism(&self, h: &AssignmentMap) -> bool {
        if h.len() != self.n {
            return false;
        }
        for i in 0..self.n {
            if !self.domain_contains(i, h.get(i)) {
                return false;
            }
        }
        self.edges
            .iter()
            .all(|e| e.rel.contains(h.get(e.from), h.get(e.to)))
    }

    /// The instance restricted to its first `l` edges (same variables and domains).
    pub fn prefix_instance(&self, l: usize) -> Instance {
        assert!(l <= self.edges.len(), "prefix length {l} exceeds edge count");
        Instance {
            n: self.n,
            q: self.q,
            domains: self.domains.clone(),
            edges: self.edges[..l].to_vec(),
        }
    }

    /// Canonical JSON serialization; byte-identical across runs.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }
}

/// First domain or relation not preserved by an operation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompatibilityError {
    #[error("domain of variable {var} is not closed under the operation")]
    Domain { var: usize },
    #[error("relation on edge ({from}, {to}) is not preserved by the operation")]
    Edge { from: usize, to: usize },
}

/// Checks that every domain and every edge relation is preserved by `op`.
///
/// Domains are checked first in variable order, then edges in their sorted
/// order; the first failure is reported.
pub fn check_compatibility(inst: &Instance, op: &OperationTable) -> Result<(), CompatibilityError> {
    for (var, dom) in inst.domains.iter().enumerate() {
        if !preserves_unary(op, dom) {
            return Err(CompatibilityError::Domain { var });
        }
    }
    for e in &inst.edges {
        if !preserves_binary(op, e.rel.pairs()) {
            return Err(CompatibilityError::Edge {
                from: e.from,
                to: e.to,
            });
        }
    }
    Ok(())
}

/// Parses the JSON form
/// `{"n": .., "q": .., "domains": [[..], ..], "edges": [{"from": .., "to": .., "rel": [[a, b], ..]}, ..]}`
/// and normalizes it.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let raw: RawInstance =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    Instance::from_parts(
        raw.n,
        raw.q,
        raw.domains,
        raw.edges
            .into_iter()
            .map(|e| (e.from, e.to, e.rel))
            .collect(),
    )
}
