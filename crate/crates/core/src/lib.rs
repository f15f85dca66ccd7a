//! Pseudospectral semigroup solver for micropolar heat-conductive flow on the
//! periodic torus, together with numerical checks of the estimates that govern
//! its mild solutions.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: Fourier fields, the Leray projection, the generators `A`,
//!   `Γ`, `B`, their fractional powers and semigroups, and all norms.
//! - [`nonlinear`]: transport, the dissipation function `Φ` and the
//!   right-hand sides `F`, `G`, `H`.
//! - [`exponents`]: admissibility checks and automatic choice of the scalar
//!   exponents used by the weighted norms.
//! - [`mild`]: Duhamel quadrature, Picard iteration, the bound recursion for
//!   the iterates, horizon selection and windowed global marching.
//! - [`analysis`]: ensemble-based verification of every estimate, decay fits,
//!   residuals, continuous dependence and the generalized Gronwall bound.
//! - [`io`]: run configuration, checkpoints and report bundles.
//!
//! Data-parallel kernels go through [`par::Exec`], which falls back to a
//! sequential loop when the `parallel` feature is disabled.

pub mod analysis;
pub mod error;
pub mod exponents;
pub mod io;
pub mod mild;
pub mod nonlinear;
pub mod par;
pub mod spectral;

pub use error::{Error, Result};
