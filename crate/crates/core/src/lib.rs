//! Exact blow-up computations for matrix pencils.
//!
//! The crate decides, with one-sided Monte Carlo error and exact
//! certificates on the positive side:
//!
//! * whether a tuple of square matrices lies in the null cone of the
//!   left-right `SL_n x SL_n` action ([`nullcone::in_nullcone`]);
//! * whether a linear or affine pencil is invertible over the free skew
//!   field ([`nullcone::skewfield_invertible`]);
//! * whether a quiver representation is semistable for a weight
//!   ([`quiver::is_semistable`]);
//! * whether a non-commutative rational formula is identically zero
//!   ([`ncformula::rit`]).
//!
//! All of these reduce to the rank of a tensor blow-up
//! `X_0 (x) I + sum_i X_i (x) T_i`, computed exactly over a prime field
//! (default `2^61 - 1`) or the rationals. [`hardinstances`] builds the pencils
//! whose blow-ups stay singular below a prescribed size.

pub mod certify;
pub mod error;
pub mod exactalg;
pub mod hardinstances;
pub mod ncformula;
pub mod nullcone;
pub mod pencil;
pub mod quiver;
pub mod rng;
pub mod selftest;

pub use error::{Error, Result};
pub use exactalg::{Field, FieldSpec, Matrix, PrimeField, Rationals, DEFAULT_PRIME};
pub use pencil::{blowup_rank, BlowupWitness, Pencil, PencilJson, WitnessJson, DEFAULT_TRIALS};
