//! Hilbert geometry of strictly convex projective surfaces: divisible domains
//! built from holonomy representations, the Hilbert geodesic flow, and
//! estimators for SRB entropy, Lyapunov and parallel exponents, boundary
//! regularity and topological entropy.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod holonomy;
pub mod projgeom;

pub use error::{Error, Result};
