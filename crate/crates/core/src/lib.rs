//! Exact computations with vertex groups, singular function rings and
//! G vertex algebras.

pub mod combinat;
pub mod deform;
pub mod error;
pub mod freefield;
pub mod hopf;
pub mod identities;
pub mod lattice;
pub mod linear;
pub mod scalar;
pub mod series;
pub mod sieves;

pub use error::{Error, Result};
pub use scalar::{Dual, Scalar};

pub type Q = num_rational::BigRational;
