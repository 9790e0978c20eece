//! Implicit triangular decomposition of nonlinear control systems.
//!
//! Given an explicit system `dot(x) = f(x, u)`, the crate builds its Pfaffian
//! representation, searches for a sequence of splittings driven by Cauchy
//! characteristics of vertical sub-distributions, straightens the resulting
//! flows into new coordinates, and assembles an implicit triangular form from
//! which flat outputs are read off. Every certificate can be checked
//! independently by numeric trajectory recovery and re-integration.

pub mod cli;
pub mod decompose;
pub mod exterior;
pub mod linalg;
pub mod pfaffian;
pub mod symexpr;
pub mod sysdsl;
pub mod triangular;
