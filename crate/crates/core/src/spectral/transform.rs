use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::grid::GridSpec;
use crate::error::{config, Result};

/// Real samples on the collocation grid, component-major, row-major per component
/// (axis 0 slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub grid: GridSpec,
    pub components: usize,
    pub data: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        PhysicalField {
            grid,
            components,
            data: vec![0.0; components * grid.points()],
        }
    }

    /// Samples `f(x)` at every collocation point.
    pub fn from_fn(grid: GridSpec, components: usize, f: impl Fn([f64; 3]) -> Vec<f64>) -> Self {
        let n = grid.points();
        let mut out = Self::zeros(grid, components);
        for idx in 0..n {
            let v = f(grid_point(&grid, idx));
            for c in 0..components {
                out.data[c * n + idx] = v[c];
            }
        }
        out
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.points();
        &self.data[c * n..(c + 1) * n]
    }

    /// Trapezoid (exact for trigonometric polynomials) integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let w = self.grid.volume() / self.grid.points() as f64;
        (0..self.components)
            .map(|c| self.component(c).iter().sum::<f64>() * w)
            .collect()
    }
}

/// Physical coordinates of collocation point `idx`.
pub fn grid_point(grid: &GridSpec, idx: usize) -> [f64; 3] {
    let n = grid.modes_per_axis;
    let h = grid.length / n as f64;
    let mut x = [0.0; 3];
    let mut rem = idx;
    for a in (0..grid.dim).rev() {
        x[a] = (rem % n) as f64 * h;
        rem /= n;
    }
    x
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place d-dimensional FFT of one component.
fn fft_nd(grid: &GridSpec, buf: &mut [Complex64], inverse: bool) {
    let n = grid.modes_per_axis;
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let total = buf.len();
    let mut line = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(buf, &mut scratch);
            continue;
        }
        let block = stride * n;
        let mut l = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                for j in 0..n {
                    line[l * n + j] = buf[outer + inner + j * stride];
                }
                l += 1;
            }
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        let mut l = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                for j in 0..n {
                    buf[outer + inner + j * stride] = line[l * n + j];
                }
                l += 1;
            }
        }
    }
}

/// Evaluates the Fourier series on the collocation grid.
pub fn to_physical(f: &SpectralField) -> PhysicalField {
    let grid = *f.grid();
    let n = grid.points();
    let mut out = PhysicalField::zeros(grid, f.components());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..f.components() {
        buf.copy_from_slice(f.component(c));
        fft_nd(&grid, &mut buf, true);
        for (o, z) in out.data[c * n..(c + 1) * n].iter_mut().zip(&buf) {
            *o = z.re;
        }
    }
    out
}

/// Fourier coefficients of grid samples; the output is exactly Hermitian.
pub fn to_spectral(g: &PhysicalField) -> Result<SpectralField> {
    let grid = g.grid;
    let n = grid.points();
    if g.components != 1 && g.components != 3 {
        return Err(config(format!("components must be 1 or 3, got {}", g.components)));
    }
    if g.data.len() != g.components * n {
        return Err(config(format!(
            "sample count {} does not match grid ({} x {})",
            g.data.len(),
            g.components,
            n
        )));
    }
    let modes = grid.modes();
    let inv = 1.0 / n as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); g.components * n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..g.components {
        for (b, x) in buf.iter_mut().zip(g.component(c)) {
            *b = Complex64::new(*x, 0.0);
        }
        fft_nd(&grid, &mut buf, false);
        let out = &mut coeffs[c * n..(c + 1) * n];
        for idx in 0..n {
            let j = modes.neg[idx];
            out[idx] = (buf[idx] + buf[j].conj()) * (0.5 * inv);
        }
    }
    SpectralField::from_coeffs(grid, g.components, coeffs)
}
