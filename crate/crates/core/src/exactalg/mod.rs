//! Exact scalar arithmetic and dense exact linear algebra.

mod field;
mod matrix;

pub use field::{is_prime, Field, FieldSpec, PrimeField, Rationals, DEFAULT_PRIME};
pub use matrix::Matrix;
