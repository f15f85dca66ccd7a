//! Seeded random fields for ensembles.
//!
//! Coefficients have modulus `|κ|^{-σ}` with independent uniform phases on the
//! retained wavevectors, zero mean, and are rescaled to a prescribed `L²` norm.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::{leray_project, SpectralField};
use super::grid::GridSpec;

pub type FieldRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FieldRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for ensemble member `i`.
pub fn member_rng(seed: u64, i: u64) -> FieldRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i.wrapping_add(1));
    r
}

/// Random real mean-zero field with `components` components.
pub fn random_field<R: Rng>(
    grid: GridSpec,
    components: usize,
    sigma: f64,
    amplitude: f64,
    rng: &mut R,
) -> SpectralField {
    let modes = grid.modes();
    let n = grid.points();
    let mut f = SpectralField::zeros(grid, components);
    {
        let c = f.coeffs_mut();
        for comp in 0..components {
            for idx in 0..n {
                let j = modes.neg[idx];
                if !modes.keep[idx] || modes.k2[idx] == 0.0 || j < idx {
                    continue;
                }
                let modulus = modes.k2[idx].powf(-0.5 * sigma);
                let phase = rng.random::<f64>() * 2.0 * PI;
                let z = Complex64::from_polar(modulus, phase);
                if j == idx {
                    c[comp * n + idx] = Complex64::new(z.re, 0.0);
                } else {
                    c[comp * n + idx] = z;
                    c[comp * n + j] = z.conj();
                }
            }
        }
    }
    normalize(f, amplitude)
}

/// Random solenoidal mean-zero vector field.
pub fn random_solenoidal<R: Rng>(grid: GridSpec, sigma: f64, amplitude: f64, rng: &mut R) -> SpectralField {
    let v = random_field(grid, 3, sigma, 1.0, rng);
    normalize(leray_project(&v).expect("vector field"), amplitude)
}

/// Random field restricted to wavevectors with every `|k_i| ≤ kmax`.
pub fn random_low_mode<R: Rng>(
    grid: GridSpec,
    components: usize,
    kmax: i64,
    sigma: f64,
    amplitude: f64,
    rng: &mut R,
) -> SpectralField {
    let mut f = random_field(grid, components, sigma, 1.0, rng);
    let modes = grid.modes();
    let n = grid.points();
    {
        let c = f.coeffs_mut();
        for comp in 0..components {
            for idx in 0..n {
                if modes.kint[idx].iter().any(|k| k.abs() > kmax) {
                    c[comp * n + idx] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    if components == 3 {
        f = leray_project(&f).expect("vector field");
    }
    normalize(f, amplitude)
}

fn normalize(f: SpectralField, amplitude: f64) -> SpectralField {
    let nrm = f.l2_norm();
    if nrm == 0.0 {
        return f;
    }
    let mut out = f.scale(amplitude / nrm);
    out.set_mean_zero_flag(true);
    out
}
