//! Exact-arithmetic engine for a polyhedral sequence-space norm.
//!
//! The crate materializes, at finite desk scale, a sequence space X whose
//! norm is the supremum over a family M of non-negative atomic measures
//! tied to a base space Z with a 1-unconditional basis. It provides:
//!
//! - exact norm, dual-norm, ball-membership, and block-estimate oracles
//!   for the base spaces ℓ_p (p > 1), c₀, (Σc₀)_ℓp, and Tsirelson's
//!   space ([`spaces`]);
//! - the parameter system (k₀, λ, ε_n, δ_n) and the successive block
//!   system F_1..F_N with its certified constants ([`construction`]);
//! - the measure family M itself: mass caps, Z-boundedness, admissible
//!   decompositions ([`measures`]);
//! - the norm and dual-norm engines for X with checkable certificates
//!   ([`norm`]);
//! - the quotient map Q: X → Z and verifiers for the inequalities that
//!   make it bounded, surjective, and dual-dominating ([`quotient`]);
//! - seeded instance generators and verification campaigns
//!   ([`campaign`]).
//!
//! All certified quantities are arbitrary-precision rationals or rational
//! enclosures; no floating point participates in any verdict.

pub mod campaign;
pub mod construction;
pub mod error;
pub mod exact;
pub mod measures;
pub mod norm;
pub mod quotient;
pub mod schreier;
pub mod simplex;
pub mod sparse;
pub mod spaces;

pub use error::{Error, Result};
pub use exact::{Rat, ScalarBound};
pub use sparse::SparseVector;
