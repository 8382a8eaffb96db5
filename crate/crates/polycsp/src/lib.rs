//! Polynomial-time constraint solving over finite domains with few
//! subpowers: a Mal'tsev solver, a generalized majority-minority solver,
//! and machine-checkable unsatisfiability traces.
//!
//! An [`instance::Instance`] is a digraph with per-variable domains and
//! binary relations on its edges; a solution assigns every variable a
//! domain value so that each edge's pair lies in its relation. When every
//! domain and relation is preserved by a Mal'tsev operation (one satisfying
//! `op(x, y, y) = op(y, y, x) = x`), [`solver::maltsev::solve`] decides the
//! instance in polynomial time by maintaining a
//! [`representation::CompactRepresentation`] of each edge prefix's solution
//! set. [`solver::gmm::solve_gmm`] does the same for generalized
//! majority-minority operations. Unsatisfiable runs yield a
//! [`certificate::Trace`] that [`certificate::check_certificate`] replays
//! independently.

pub mod algebra;
pub mod certificate;
pub mod instance;
pub mod oracle;
pub mod representation;
pub mod solver;
