//! Orientable non-linearities, one-dimensional multi-marginal optimal transport
//! and the decoupling of elliptic gradient systems `Δu = ∇H(u)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`nonlinearity`]: non-linearities `H: ℝᵐ → ℝ` on a box, and grid-certified
//!   classification as orientable, compatible or submodular.
//! - [`mmot1d`]: the monotone (comonotone after sign flips) solution of the
//!   multi-marginal transport problem with one-dimensional marginals, discrete
//!   Kantorovich potentials, duality certificates and a brute-force oracle.
//! - [`pde`]: damped Newton solves of the one-dimensional two-point problem and
//!   monotonicity checks for solution profiles.
//! - [`decouple`]: decoupling potentials built from monotone profiles and the
//!   inequalities they satisfy.
//! - [`rearrange`]: rectangular rearrangement of gridded fields on `Ω×[0,1]`,
//!   energies and a discrete Hardy–Littlewood check.
//! - [`examples`]: end-to-end pipelines for the three worked non-linearities.

// `!(a < b)` is deliberate: a NaN must fail every acceptance comparison.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decouple;
pub mod error;
pub mod examples;
pub mod io;
pub mod mmot1d;
pub mod nonlinearity;
pub mod pde;
pub mod rearrange;
pub mod tolerances;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
