//! Machine-checkable unsatisfiability traces.
//!
//! A trace binds an instance and an operation by digest, records the edge
//! order, and lists every intermediate representation of a solver run that
//! ended empty. The checker replays the run with the same deterministic step
//! the solvers use: the first representation must equal the initial one,
//! each subsequent one must equal the step applied to its predecessor, every
//! stored witness must solve the corresponding edge prefix, and the final
//! representation must be empty. The first divergence is reported with the
//! step where replay failed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{validate_gmm, validate_maltsev, OperationTable, Value};
use crate::instance::{check_compatibility, Instance};
use crate::representation::{
    init_representation, init_representation_gmm, CompactRepresentation, RepMode,
};
use crate::solver::gmm::next_gmm;
use crate::solver::maltsev::next;

/// SHA-256 of a canonical serialization, as lowercase hex.
pub fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        write!(out, "{byte:02x}").expect("writing to a string");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TraceEdge {
    from: usize,
    to: usize,
    rel: Vec<(Value, Value)>,
}

/// An unsatisfiability certificate: the full representation chain of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    instance_digest: String,
    algebra_digest: String,
    mode: RepMode,
    edges: Vec<TraceEdge>,
    reps: Vec<CompactRepresentation>,
    verdict: String,
}

impl Trace {
    pub(crate) fn new(inst: &Instance, op: &OperationTable, reps: Vec<CompactRepresentation>) -> Trace {
        let mode = reps.first().expect("chain has an initial representation").mode();
        Trace {
            instance_digest: sha256_hex(&inst.to_canonical_json()),
            algebra_digest: sha256_hex(&op.to_canonical_json()),
            mode,
            edges: inst
                .edges()
                .iter()
                .map(|e| TraceEdge {
                    from: e.from,
                    to: e.to,
                    rel: e.rel.pairs().to_vec(),
                })
                .collect(),
            reps,
            verdict: "unsat".to_string(),
        }
    }

    pub fn mode(&self) -> RepMode {
        self.mode
    }

    /// The recorded chain, `R_0` through `R_m`.
    pub fn reps(&self) -> &[CompactRepresentation] {
        &self.reps
    }

    pub fn instance_digest(&self) -> &str {
        &self.instance_digest
    }
}

/// Why a certificate was rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertificateError {
    #[error("certificate is not a valid trace: {0}")]
    Malformed(String),
    #[error("instance digest mismatch: certificate has {got}, instance hashes to {want}")]
    InstanceDigest { got: String, want: String },
    #[error("algebra digest mismatch: certificate has {got}, operation hashes to {want}")]
    AlgebraDigest { got: String, want: String },
    #[error("verdict {got:?} is not \"unsat\"")]
    Verdict { got: String },
    #[error("certificate lists {got} edges, instance has {want}")]
    EdgeCount { got: usize, want: usize },
    #[error("edge {index} differs between certificate and instance")]
    EdgeMismatch { index: usize },
    #[error("certificate has {got} representations, a run over {edges} edges stores {want}")]
    StepCount { got: usize, want: usize, edges: usize },
    #[error("representation {step} does not match the instance shape or trace mode")]
    Shape { step: usize },
    #[error("operation does not fit the certificate mode: {reason}")]
    OperationMode { reason: String },
    #[error("instance is not preserved by the operation: {reason}")]
    Incompatible { reason: String },
    #[error("rejected at step {step}: {reason}")]
    RejectAtStep { step: usize, reason: String },
}

/// Serializes a trace; byte-identical for equal traces.
pub fn emit_certificate(trace: &Trace) -> String {
    serde_json::to_string(trace).expect("trace serializes")
}

/// Parses a trace emitted by [`emit_certificate`].
pub fn parse_certificate(text: &str) -> Result<Trace, CertificateError> {
    serde_json::from_str(text).map_err(|e| CertificateError::Malformed(e.to_string()))
}

/// Replays `trace` against `inst` and `op`, accepting only a faithful,
/// complete record of an unsatisfiable run.
pub fn check_certificate(
    trace: &Trace,
    inst: &Instance,
    op: &OperationTable,
) -> Result<(), CertificateError> {
    let want = sha256_hex(&inst.to_canonical_json());
    if trace.instance_digest != want {
        return Err(CertificateError::InstanceDigest {
            got: trace.instance_digest.clone(),
            want,
        });
    }
    let want = sha256_hex(&op.to_canonical_json());
    if trace.algebra_digest != want {
        return Err(CertificateError::AlgebraDigest {
            got: trace.algebra_digest.clone(),
            want,
        });
    }
    if trace.verdict != "unsat" {
        return Err(CertificateError::Verdict {
            got: trace.verdict.clone(),
        });
    }

    let m = inst.edges().len();
    if trace.edges.len() != m {
        return Err(CertificateError::EdgeCount {
            got: trace.edges.len(),
            want: m,
        });
    }
    for (index, (te, e)) in trace.edges.iter().zip(inst.edges()).enumerate() {
        if te.from != e.from || te.to != e.to || te.rel != e.rel.pairs() {
            return Err(CertificateError::EdgeMismatch { index });
        }
    }
    if trace.reps.len() != m + 1 {
        return Err(CertificateError::StepCount {
            got: trace.reps.len(),
            want: m + 1,
            edges: m,
        });
    }
    for (step, rep) in trace.reps.iter().enumerate() {
        if rep.n() != inst.n() || rep.q() != inst.q() || rep.mode() != trace.mode {
            return Err(CertificateError::Shape { step });
        }
    }

    // The replay functions assume a valid operation preserving the instance;
    // without that the trace proves nothing.
    let class = match trace.mode {
        RepMode::Maltsev => {
            validate_maltsev(op).map_err(|e| CertificateError::OperationMode {
                reason: e.to_string(),
            })?;
            None
        }
        RepMode::Gmm { k } => {
            let class = validate_gmm(op).map_err(|e| CertificateError::OperationMode {
                reason: e.to_string(),
            })?;
            if op.arity() != k + 1 {
                return Err(CertificateError::OperationMode {
                    reason: format!(
                        "mode expects arity {}, operation has arity {}",
                        k + 1,
                        op.arity()
                    ),
                });
            }
            Some(class)
        }
    };
    check_compatibility(inst, op).map_err(|e| CertificateError::Incompatible {
        reason: e.to_string(),
    })?;

    let expected0 = if inst.has_empty_domain() {
        CompactRepresentation::new(trace.mode, inst.n(), inst.q())
    } else {
        match (trace.mode, &class) {
            (RepMode::Maltsev, _) => {
                init_representation(inst).expect("domains checked nonempty")
            }
            (RepMode::Gmm { k }, Some(class)) => {
                init_representation_gmm(inst, |a, b| class.is_minority(a, b), k)
                    .expect("domains checked nonempty")
            }
            (RepMode::Gmm { .. }, None) => unreachable!("classification built for gmm mode"),
        }
    };
    let reject = |step: usize, reason: &str| CertificateError::RejectAtStep {
        step,
        reason: reason.to_string(),
    };
    if trace.reps[0] != expected0 {
        return Err(reject(0, "initial representation differs from the instance's"));
    }
    check_witnesses(trace, inst, 0)?;

    let mut touched = vec![false; inst.n()];
    for (l, edge) in inst.edges().iter().enumerate() {
        let replayed = match &class {
            None => next(&trace.reps[l], op, edge, &touched),
            Some(class) => next_gmm(&trace.reps[l], op, class, edge, &touched),
        };
        if replayed != trace.reps[l + 1] {
            return Err(reject(l + 1, "replayed step differs from the recorded one"));
        }
        check_witnesses(trace, inst, l + 1)?;
        touched[edge.from] = true;
        touched[edge.to] = true;
    }

    if !trace.reps[m].is_empty() {
        return Err(reject(m, "final representation is not empty"));
    }
    Ok(())
}

fn check_witnesses(trace: &Trace, inst: &Instance, step: usize) -> Result<(), CertificateError> {
    let prefix = inst.prefix_instance(step);
    for (key, map) in trace.reps[step].iter() {
        if !prefix.is_homomorphism(map) {
            return Err(CertificateError::RejectAtStep {
                step,
                reason: format!("witness at {key:?} does not solve the edge prefix"),
            });
        }
    }
    Ok(())
}
