//! Exact rational geometry for abelian group orbits: stabilizer decomposition
//! over ℚ, marker sets, nearly-square rectangular marker regions, and
//! eventual-agreement traces.
//!
//! Everything is computed with arbitrary-precision rationals; there is no
//! floating point anywhere and no tolerance in any comparison. The crate is
//! organized bottom-up:
//!
//! - [`exact`]: scalars, vectors, torus vectors, group elements, the sup
//!   seminorm and its pseudometric.
//! - [`linalg`]: dense exact linear algebra (solve, rank, span tests) and the
//!   lower-left Hermite normal form used for lattice bases.
//! - [`stabilizer`]: canonical (u, v, w) bases for finitely described closed
//!   subgroups of ℝⁿ, quotient types, and exact membership tests.
//! - [`action`]: translation-model actions, coset canonicalization, the
//!   torus-unwrapping action and the free quotient action.
//! - [`marker`]: greedy maximal discrete subsets and d-marker sets on finite
//!   windows, with exact verification reports.
//! - [`region`]: rectangular marker regions — overlap arrangements, face
//!   adjustment, polyhedron cutting, near-square subdivision, and orthogonal
//!   grid partitions.
//! - [`witness`]: growth schedules, the region hierarchy, center selection,
//!   reduction traces and eventual-agreement checks.

pub mod action;
pub mod exact;
pub mod linalg;
pub mod marker;
pub mod region;
pub mod seq;
pub mod stabilizer;
pub mod witness;

pub use exact::{GroupElement, Rational, RVec, TorusVec};
