//! Mechanical checks of sufficient algebraic conditions for steepness of a
//! smooth function at a point, from its 5-jet, for 2 to 5 variables.
//!
//! The crate is organised bottom-up:
//!
//! * [`polyjet`]: exact polynomials, jets and the multilinear forms `h^k[…]`;
//! * [`formal`]: polynomials over formal jet symbols, shared by the search
//!   engine and the system generator;
//! * [`search`]: multistart Riemannian search and grid certification over
//!   products of spheres;
//! * [`conditions`]: jet degeneracy, the per-dimension condition checkers and
//!   the index tables;
//! * [`generator`]: formal construction of the bad-set defining systems.
//!
//! Every verdict reports sufficient conditions only: a jet that is not
//! certified may still be steep.

pub mod conditions;
pub mod error;
pub mod formal;
pub mod generator;
mod linalg;
pub mod polyjet;
pub mod search;

pub use error::{Error, Result};
