//! Class numbers and regulators of purely cubic function fields.
//!
//! This crate computes the divisor class number h of K = F_q(x, y) with
//! y^3 = G H^2 (G, H monic, squarefree, coprime, characteristic at least 5),
//! and for unit-rank-one fields additionally the regulator R_x, via:
//!
//! 1. a truncated Euler-product estimate E with a rigorous error bound U
//!    such that h always lies in [E - U, E + U],
//! 2. a parallel two-herd kangaroo search (or baby-step giant-step) for the
//!    exact value inside that interval, walking either the ideal class group
//!    (signature (3,1)) or the infrastructure of the maximal order
//!    (signature (1,1;1,2)),
//! 3. regulator extraction from the located multiple by prime factorization,
//! 4. an exact zeta-function oracle (point counting + Newton identities)
//!    usable whenever q^g is small enough to enumerate.
//!
//! Modules build bottom-up: prime fields and polynomials, residue fields,
//! the curve model, the exact oracle, the analytic estimator, ideal
//! arithmetic in the maximal order, infrastructure walking, the searches,
//! and regulator extraction. The `jobs` module exposes the config/report
//! types the command-line front end consumes.

pub mod curve;
pub mod embed;
pub mod error;
pub mod estimator;
pub mod field;
pub mod ideal;
pub mod infra;
pub mod jobs;
pub mod poly;
pub mod regulator;
pub mod residue;
pub mod search;
pub mod zeta;

pub use error::{Error, Result};
