//! Spectral objects of Zeeman operators on Heisenberg-type groups.
//!
//! The engine is generic over the real scalar (`f32` or `f64`); the aliases
//! at the crate root fix `f64`, which is what the verification suites use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hgroup;
pub mod intertwine;
pub mod kernels;
pub mod numerics;
pub mod polyalg;
pub mod scalar;
pub mod special;
pub mod verify;
pub mod zeeman;
pub mod zones;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type Matrix = hgroup::SquareMatrix<f64>;
pub type Space = hgroup::EndomorphismSpace<f64>;
pub type Polynomial = polyalg::ComplexPolynomial<f64>;
pub type Rule = numerics::QuadratureRule<f64>;
