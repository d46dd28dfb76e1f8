//! Independent checks for the closed forms and the linear solves.
//!
//! Nothing here calls into `analytics` or `measures`; agreement between
//! the two sides is what the tests assert.

mod montecarlo;
mod neumann;
mod quadrature;

pub use montecarlo::{moments_bruteforce, MIN_SAMPLES};
pub use neumann::{neumann_measure, neumann_partial_sums, neumann_tail_bound};
pub use quadrature::{integrate, quad_j, quad_l, QuadratureResult, DEFAULT_REL_TOL};
