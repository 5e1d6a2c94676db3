//! Decide whether a finite set of integers contains a q-th power residue
//! modulo almost every natural number N with at most k prime factors.
//!
//! For an odd prime q, a finite integer set S without perfect q-th powers is
//! identified with a set of points of PG(F_q^n) by reading off the exponent
//! vectors of the q-free parts of its elements (n = number of distinct support
//! primes). S has the residue property above if and only if that point set
//! meets every codimension-k subspace of F_q^n, i.e. is a k-blocking set.
//!
//! The crate implements both sides of this equivalence:
//!
//! - [`field_linalg`] — exact linear algebra over F_q and exhaustive
//!   enumeration of d-dimensional subspaces of F_q^n.
//! - [`geometry`] — projective point sets, the k-blocking decision, minimality,
//!   and the extremal constructions (k-spaces, the projective triangle, cones).
//! - [`bridge`] — q-free radicals, the integer-set ↔ point-set maps, and the
//!   invariance transforms (exponentiation, prime switching, exponent scaling).
//! - [`oracle`] — the number-theoretic side: q-th power residue tests modulo
//!   primes and composites, candidate-modulus enumeration, verification and
//!   witness search, and the combined decision procedure.
//! - [`equivalence`] — geometric q-equivalence of integer sets via a PGL(n,q)
//!   point-set matching search.

pub mod bridge;
pub mod equivalence;
pub mod error;
pub mod field_linalg;
pub mod geometry;
pub mod oracle;

pub use bridge::{QFreeInteger, ResidueSet};
pub use equivalence::ProjectiveMap;
pub use error::{Error, Result};
pub use field_linalg::{FqMatrix, FqScalar, Subspace};
pub use geometry::{PointSet, ProjectivePoint};
pub use oracle::{Certificate, Decision, FactoredModulus, Verdict, WitnessReport};
