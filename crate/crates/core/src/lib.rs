//! Renormalized Born-Oppenheimer treatment of two heavy particles coupled to
//! one light particle through attractive two-dimensional contact interactions.
//!
//! Everything is evaluated in dimensionless form: lengths in units of the
//! light-particle spread `zeta0`, square-root energies in units of the
//! one-center scale `epsilon`, and `hbar = 1`. [`PhysicalParams`] converts at
//! the boundary.
//!
//! Module map:
//!
//! - [`specfun`]: modified Bessel `K_0..K_3`, log-gamma, digamma, trigamma,
//!   generalized Laguerre polynomials.
//! - [`binding`]: the two-center binding curve `ln w = K_0(w u)` and its
//!   derivatives.
//! - [`lightfield`]: the normalized light wavefunction, its normalization
//!   derivatives and closed-form overlap integrals, plus a 2D quadrature
//!   oracle ([`quad`]).
//! - [`effpot`]: every term of the averaged heavy-particle equation and the
//!   numerical extraction of their small-separation singular coefficients.
//! - [`heavy`]: the effective radial problem (Laguerre spectrum, shooting
//!   solver, wavefunctions, expectation values).
//! - [`pert`]: first-order corrections to the ground-state energy.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Coefficient tables
// keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod binding;
pub mod effpot;
pub mod error;
pub mod heavy;
pub mod lightfield;
pub mod ode;
pub mod params;
pub mod pert;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use params::PhysicalParams;
