use num_complex::Complex64;

use super::grid::GridSpec;
use crate::error::{config, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Truncated Fourier coefficients of a real scalar (1 component) or vector
/// (3 components) field. Components are stored one after another, each in
/// FFT order over the flattened wavevector index.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    components: usize,
    coeffs: Vec<Complex64>,
    mean_zero: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        assert!(components == 1 || components == 3, "components must be 1 or 3");
        SpectralField {
            grid,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * grid.points()],
            mean_zero: true,
        }
    }

    pub fn scalar_zeros(grid: GridSpec) -> Self {
        Self::zeros(grid, 1)
    }

    pub fn vector_zeros(grid: GridSpec) -> Self {
        Self::zeros(grid, 3)
    }

    /// Wraps raw coefficients. `mean_zero` is recomputed from the data.
    pub fn from_coeffs(grid: GridSpec, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if components != 1 && components != 3 {
            return Err(config(format!("components must be 1 or 3, got {components}")));
        }
        if coeffs.len() != components * grid.points() {
            return Err(config(format!(
                "coefficient length {} does not match grid ({} x {})",
                coeffs.len(),
                components,
                grid.points()
            )));
        }
        let mut f = SpectralField {
            grid,
            components,
            coeffs,
            mean_zero: false,
        };
        f.mean_zero = f.mean().iter().all(|m| *m == 0.0);
        Ok(f)
    }

    /// Real field `a e^{iκ·x} + conj(a) e^{-iκ·x}` (per component) for one wavevector.
    pub fn single_mode(grid: GridSpec, k: [i64; 3], amplitude: &[Complex64]) -> Result<Self> {
        let comps = amplitude.len();
        let mut f = Self::zeros(grid, comps);
        let idx = grid
            .index_of(k)
            .ok_or_else(|| config(format!("wavevector {k:?} not representable on grid")))?;
        let nidx = grid.modes().neg[idx];
        let n = grid.points();
        for (c, a) in amplitude.iter().enumerate() {
            if idx == nidx {
                f.coeffs[c * n + idx] = Complex64::new(2.0 * a.re, 0.0);
            } else {
                f.coeffs[c * n + idx] = *a;
                f.coeffs[c * n + nidx] = a.conj();
            }
        }
        f.mean_zero = idx != 0;
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_vector(&self) -> bool {
        self.components == 3
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.points();
        &self.coeffs[c * n..(c + 1) * n]
    }

    /// True when the field was constructed with (or reduced to) zero mean.
    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Coefficient of component `c` at integer wavevector `k` (zero if not representable).
    pub fn get(&self, c: usize, k: [i64; 3]) -> Complex64 {
        match self.grid.index_of(k) {
            Some(idx) => self.coeffs[c * self.grid.points() + idx],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Real part of the zero-mode coefficient per component.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.points();
        (0..self.components).map(|c| self.coeffs[c * n].re).collect()
    }

    /// Copy with the zero mode removed.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        let n = self.grid.points();
        for c in 0..self.components {
            out.coeffs[c * n] = Complex64::new(0.0, 0.0);
        }
        out.mean_zero = true;
        out
    }

    pub(crate) fn set_mean_zero_flag(&mut self, flag: bool) {
        self.mean_zero = flag;
    }

    pub fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(config("grid mismatch between fields"));
        }
        if self.components != other.components {
            return Err(Error::Type(format!(
                "component mismatch: {} vs {}",
                self.components, other.components
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &SpectralField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(SpectralField {
            grid: self.grid,
            components: self.components,
            coeffs,
            mean_zero: self.mean_zero && other.mean_zero,
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b * s)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// L² inner product over the torus via Parseval.
    pub fn dot(&self, other: &SpectralField) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        Ok(s * self.grid.volume())
    }

    /// L² norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.volume()).sqrt()
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `f̂(-k) = conj f̂(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let modes = self.grid.modes();
        let n = self.grid.points();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let comp = &self.coeffs[c * n..(c + 1) * n];
            for (idx, &nidx) in modes.neg.iter().enumerate() {
                worst = worst.max((comp[idx] - comp[nidx].conj()).norm());
            }
        }
        worst
    }

    /// Largest coefficient modulus outside the retained wavevector box.
    pub fn dealias_defect(&self) -> f64 {
        let modes = self.grid.modes();
        let n = self.grid.points();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            for idx in 0..n {
                if !modes.keep[idx] {
                    worst = worst.max(self.coeffs[c * n + idx].norm());
                }
            }
        }
        worst
    }

    /// Zeroes every mode outside the retained wavevector box.
    pub fn dealiased(mut self) -> Self {
        let modes = self.grid.modes();
        let n = self.grid.points();
        for c in 0..self.components {
            for idx in 0..n {
                if !modes.keep[idx] {
                    self.coeffs[c * n + idx] = Complex64::new(0.0, 0.0);
                }
            }
        }
        self
    }

    /// Spectral derivative along `axis` (zero for axes beyond the grid dimension).
    pub fn derivative(&self, axis: usize) -> Self {
        let modes = self.grid.modes();
        let n = self.grid.points();
        let mut out = self.clone();
        for c in 0..self.components {
            for idx in 0..n {
                out.coeffs[c * n + idx] = self.coeffs[c * n + idx] * I * modes.kvec[idx][axis];
            }
        }
        out.mean_zero = true;
        out
    }

    /// Gradient of a scalar field.
    pub fn gradient(&self) -> Result<Self> {
        if self.components != 1 {
            return Err(Error::Type("gradient requires a scalar field".into()));
        }
        let n = self.grid.points();
        let mut out = SpectralField::vector_zeros(self.grid);
        for a in 0..3 {
            let d = self.derivative(a);
            out.coeffs[a * n..(a + 1) * n].copy_from_slice(&d.coeffs);
        }
        Ok(out)
    }

    /// Divergence of a vector field.
    pub fn divergence(&self) -> Result<Self> {
        if self.components != 3 {
            return Err(Error::Type("divergence requires a vector field".into()));
        }
        let modes = self.grid.modes();
        let n = self.grid.points();
        let mut out = SpectralField::scalar_zeros(self.grid);
        for idx in 0..n {
            let k = modes.kvec[idx];
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..3 {
                s += self.coeffs[a * n + idx] * k[a];
            }
            out.coeffs[idx] = s * I;
        }
        Ok(out)
    }

    /// Curl (`rot`) of a vector field.
    pub fn curl(&self) -> Result<Self> {
        if self.components != 3 {
            return Err(Error::Type("curl requires a vector field".into()));
        }
        let modes = self.grid.modes();
        let n = self.grid.points();
        let mut out = SpectralField::vector_zeros(self.grid);
        for idx in 0..n {
            let k = modes.kvec[idx];
            let v = [
                self.coeffs[idx],
                self.coeffs[n + idx],
                self.coeffs[2 * n + idx],
            ];
            out.coeffs[idx] = I * (v[2] * k[1] - v[1] * k[2]);
            out.coeffs[n + idx] = I * (v[0] * k[2] - v[2] * k[0]);
            out.coeffs[2 * n + idx] = I * (v[1] * k[0] - v[0] * k[1]);
        }
        Ok(out)
    }

    /// Component `c` as a scalar field.
    pub fn extract(&self, c: usize) -> Self {
        let n = self.grid.points();
        let mut f = SpectralField::scalar_zeros(self.grid);
        f.coeffs.copy_from_slice(&self.coeffs[c * n..(c + 1) * n]);
        f.mean_zero = self.coeffs[c * n] == Complex64::new(0.0, 0.0);
        f
    }

    /// Stacks three scalar fields into a vector field.
    pub fn stack(parts: [&SpectralField; 3]) -> Result<Self> {
        let grid = *parts[0].grid();
        let n = grid.points();
        let mut out = SpectralField::vector_zeros(grid);
        for (a, p) in parts.iter().enumerate() {
            if p.components != 1 || p.grid != grid {
                return Err(Error::Type("stack expects three scalar fields on one grid".into()));
            }
            out.coeffs[a * n..(a + 1) * n].copy_from_slice(&p.coeffs);
        }
        out.mean_zero = parts.iter().all(|p| p.mean_zero);
        Ok(out)
    }
}

pub(crate) fn leray_project(v: &SpectralField) -> Result<SpectralField> {
    if v.components != 3 {
        return Err(Error::Type("Leray projection requires a vector field".into()));
    }
    let modes = v.grid.modes();
    let n = v.grid.points();
    let mut out = v.clone();
    for idx in 0..n {
        let k2 = modes.k2[idx];
        if k2 == 0.0 {
            for a in 0..3 {
                out.coeffs[a * n + idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let k = modes.kvec[idx];
        let mut kv = Complex64::new(0.0, 0.0);
        for a in 0..3 {
            kv += v.coeffs[a * n + idx] * k[a];
        }
        let s = kv / k2;
        for a in 0..3 {
            out.coeffs[a * n + idx] = v.coeffs[a * n + idx] - s * k[a];
        }
    }
    out.mean_zero = true;
    Ok(out)
}
