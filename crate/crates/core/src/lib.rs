//! Normal ordering, lowest-weight modules and KMS states for the extended
//! enveloping algebra of sl(2,ℂ) generated by `X`, `Y` and `N_F`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod algebra;
pub mod funcspace;
pub mod parse;
pub mod recovery;
pub mod repr;
pub mod states;
pub mod verify;

pub use algebra::{AlgebraElement, Monomial};
pub use funcspace::FunctionExpr;
pub use num_complex::Complex64;
