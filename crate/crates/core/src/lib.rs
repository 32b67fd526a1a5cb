//! Thermodynamic formalism for finite tuples of real square matrices.
//!
//! The crate computes pressures, joint and `p`-radii, and the `s = 2`
//! equilibrium state of a matrix tuple in closed form, and runs witness
//! producing structural checks on the tuple (invariant subspaces, zero
//! products, periodic structure, conformal conjugacy).

pub mod builtins;
pub mod classify;
pub mod error;
pub mod kusuoka;
pub mod linalg;
pub mod pressure;
pub mod products;
pub mod rational;
pub mod report;
pub mod reproduce;
pub mod spec_file;
pub mod structure;
pub mod tuple;

pub use error::{Error, Result};
pub use tuple::{enumerate_words, Budget, Matrix, MatrixTuple, ScalarPolicy, Word};
