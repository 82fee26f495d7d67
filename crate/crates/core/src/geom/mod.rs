//! Box and halfspace-polytope algebra.
//!
//! Disturbance supports are axis-aligned boxes; constraint, parameter and
//! terminal sets are H-polytopes. All values are immutable after
//! construction and every operation is a pure function.

mod boxset;
pub mod lp;
mod polytope;

pub use boxset::BoxSet;
pub use lp::{LpSolution, LpStatus};
pub use polytope::{pre_set, HPolytope, SET_TOL, UNBOUNDED};
