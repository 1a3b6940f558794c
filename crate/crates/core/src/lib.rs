//! Exact finite computations around product sets in amenable groups.
//!
//! The crate provides exact arithmetic in lattices, the discrete Heisenberg
//! group, unitriangular integer matrices and finite vector groups
//! ([`groups`]); Følner set families with exact defects, densities and
//! square-absolute-continuity certificates ([`folner`]); product-set witness
//! search and finite-slice emptiness certificates ([`sumsets`]); and a
//! symbolic shift system used to extract witnesses greedily ([`dynamics`]).

// Errors carry the offending elements and exact ratios.
#![allow(clippy::result_large_err)]

pub mod dynamics;
pub mod error;
pub mod folner;
pub mod groups;
pub mod int;
pub mod rational;
pub mod region;
pub mod sets;
pub mod sumsets;

pub use groups::{GroupDescriptor, GroupElement, GroupError, GroupKind, Polynomial};
pub use int::Int;
pub use error::{Error, Result};
pub use rational::Rational;
pub use sets::SetFamily;

/// Default cap on the number of elements an operation will enumerate.
pub const DEFAULT_BUDGET: u64 = 50_000_000;
