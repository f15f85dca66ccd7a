//! Fields on the periodic torus as truncated Fourier series.
//!
//! Coefficients use the convention `f(x) = Σ_k f̂(k) e^{iκ_k·x}` with
//! `κ_k = 2πk/L`, so a constant field has `f̂(0)` equal to its value and
//! `cos(2πx/L)` has `f̂(±e₁) = 1/2`. Vector fields always carry three
//! components; in two dimensions they are independent of the third coordinate.

mod field;
mod grid;
mod norm;
mod operator;
pub mod random;
mod transform;

pub use field::SpectralField;
pub use grid::{lambda1, GridSpec, ModeTable};
pub use norm::{norm, norm_with, NormRequest};
pub(crate) use operator::exponential_step;
pub use operator::{apply_operator, semigroup_apply, spectral_shells, OperatorKind, OperatorScales, OperatorSymbol};
pub use transform::{grid_point, to_physical, to_spectral, PhysicalField};

/// Leray projection onto divergence-free vector fields; the mean is removed.
pub fn leray_project(v: &SpectralField) -> crate::Result<SpectralField> {
    field::leray_project(v)
}
