//! Exact computation and certification of regularity constants for
//! sparse-regression design matrices.
//!
//! The crate covers the restricted eigenvalue, compatibility and `ℓq`
//! sensitivity conditions alongside the classical spark, mutual incoherence
//! and restricted isometry constants. Where the constant can be obtained by
//! finite enumeration (spark, incoherence, RIP, `ℓ1`/`ℓ∞` sensitivity) it is
//! computed exactly; elsewhere a certified bound is reported together with a
//! witness vector.
//!
//! Everything here is `no_std` + `alloc`. The default `std` feature only adds
//! a rayon worker pool for the independent enumeration subproblems.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is the NaN-rejecting form used throughout validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Elimination and pivoting loops index several arrays by the same counter.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod checkers;
pub mod cone;
pub mod ensembles;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod lp;
pub mod matrix;
pub mod reduction;
pub mod scalar;
pub mod transforms;

mod par;

pub use cone::ConeSpec;
pub use error::{Error, Result};
pub use matrix::{CrossCovariance, DesignMatrix, InstrumentMatrix, Matrix};
pub use scalar::{Arithmetic, Rational, Scalar};

/// Version of the JSON/CSV output schemas produced by the companion crate.
pub const SCHEMA_VERSION: &str = "1";
