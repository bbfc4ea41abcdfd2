//! Numerical verification of semi-slant Riemannian submersions.
//!
//! A map between coordinate charts is analysed pointwise: its vertical and
//! horizontal splitting, the complex and slant parts of the vertical space,
//! the slant angle, the O'Neill tensors, and a catalog of geometric
//! identities evaluated as residuals.

// index loops mirror the tensor formulas; `!(x < tol)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod jet;
pub mod linalg;
pub mod oneill;
pub mod real;
pub mod report;
pub mod submersion;
pub mod theorems;
