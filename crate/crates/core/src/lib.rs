//! Lifting of Hörmander vector fields to Lie groups and saturated fundamental
//! solutions.

pub mod cli;
pub mod closure;
pub mod expr;
pub mod fields;
pub mod groupgeom;
pub mod kernels;
pub mod lifting;
pub mod model_file;
pub mod quotient;
pub mod quadrature;
pub mod saturation;
pub mod suite;
pub mod verification;

pub use expr::{Expr, Func, Rational};
