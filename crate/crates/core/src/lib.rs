//! Truncated q-deformed Fock spaces and their q-Gaussian operators.
//!
//! The crate builds the q-Fock space over a `d`-dimensional real Hilbert
//! space up to a fixed tensor level, its left and right creation,
//! annihilation and Wick operators, first and second quantization, and a
//! numerical harness for the Rademacher-vector decay argument that shows
//! the q-Gaussian algebras are factors.
//!
//! Letter `0` always denotes the distinguished unit vector `e`.

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod factoriality;
pub mod fock;
pub mod operators;
pub mod quantization;
pub mod report;
pub mod suite;
pub mod symmetrizer;
pub mod word;

pub use combinatorics::{QScalar, QTable};
pub use error::{Error, Result};
pub use fock::{FockBasis, FockSpace, FockVector};
pub use operators::{w_left, w_right, Elementary, FockOperator, Side};
pub use word::{Letter, Word, E};
