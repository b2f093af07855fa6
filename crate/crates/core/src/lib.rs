//! Dyadic weight constants, weighted BMO norms and Calderón–Zygmund/sparse
//! decompositions for piecewise-constant weights on `[0,1)^d`, `d ∈ {1, 2}`.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bmo;
pub mod constants;
pub mod czsparse;
pub mod error;
pub mod functionals;
pub mod generators;
pub mod grid;
pub mod maximal;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Cube, Family, GridFunction, GridSpec};
