use serde::{Deserialize, Serialize};

use super::field::{leray_project, SpectralField};
use super::operator::{apply_operator, OperatorKind, OperatorScales, OperatorSymbol};
use super::transform::to_physical;
use crate::error::{domain, Result};

/// Which norm to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space")]
pub enum NormRequest {
    /// `‖f‖_s`, mean included.
    Lp { s: f64 },
    /// `Σ_{|m|≤k} ‖∂^m f‖_s` over all multi-indices.
    Wks { k: u32, s: f64 },
    /// `‖ |∇^k f| ‖_s` with the Frobenius norm over all ordered index tuples.
    GradSeminorm { k: u32, s: f64 },
    /// `‖A^α P f‖_p`.
    Xalpha { alpha: f64, p: f64 },
    /// `‖Γ^β (f - f̄)‖_q`.
    Ybeta { beta: f64, q: f64 },
    /// `‖B^γ (f - f̄)‖_r`.
    Zgamma { gamma: f64, r: f64 },
}

fn check_lebesgue(s: f64) -> Result<()> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(domain(format!("Lebesgue exponent must lie in (1,∞), got {s}")));
    }
    Ok(())
}

fn check_power(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(domain(format!("fractional power must lie in [0,1], got {a}")));
    }
    Ok(())
}

/// Norm with the unit operator normalization.
pub fn norm(f: &SpectralField, req: NormRequest) -> Result<f64> {
    norm_with(f, req, &OperatorScales::default())
}

/// Norm with explicit operator scales.
pub fn norm_with(f: &SpectralField, req: NormRequest, scales: &OperatorScales) -> Result<f64> {
    let grid = *f.grid();
    match req {
        NormRequest::Lp { s } => {
            check_lebesgue(s)?;
            Ok(lebesgue(f, s))
        }
        NormRequest::Wks { k, s } => {
            check_lebesgue(s)?;
            let mut total = 0.0;
            for m in multi_indices(grid.dim, k) {
                let mut d = f.clone();
                for (axis, &times) in m.iter().enumerate() {
                    for _ in 0..times {
                        d = d.derivative(axis);
                    }
                }
                total += lebesgue(&d, s);
            }
            Ok(total)
        }
        NormRequest::GradSeminorm { k, s } => {
            check_lebesgue(s)?;
            if k == 0 {
                return Ok(lebesgue(f, s));
            }
            if s == 2.0 {
                let modes = grid.modes();
                let n = grid.points();
                let mut acc = 0.0;
                for c in 0..f.components() {
                    for (idx, z) in f.coeffs()[c * n..(c + 1) * n].iter().enumerate() {
                        acc += modes.k2[idx].powi(k as i32) * z.norm_sqr();
                    }
                }
                return Ok((acc * grid.volume()).sqrt());
            }
            let mut parts = vec![f.clone()];
            for _ in 0..k {
                parts = parts
                    .iter()
                    .flat_map(|p| (0..grid.dim).map(move |a| p.derivative(a)))
                    .collect();
            }
            let phys: Vec<_> = parts.iter().map(to_physical).collect();
            let npts = grid.points();
            let mut acc = 0.0;
            for idx in 0..npts {
                let mut sq = 0.0;
                for p in &phys {
                    for c in 0..p.components {
                        sq += p.data[c * npts + idx].powi(2);
                    }
                }
                acc += sq.sqrt().powf(s);
            }
            Ok((acc * grid.volume() / npts as f64).powf(1.0 / s))
        }
        NormRequest::Xalpha { alpha, p } => {
            check_lebesgue(p)?;
            check_power(alpha)?;
            let proj = leray_project(f)?;
            let op = OperatorSymbol::new(OperatorKind::StokesA, grid, alpha).with_scales(*scales);
            Ok(lebesgue(&apply_operator(&op, &proj)?, p))
        }
        NormRequest::Ybeta { beta, q } => {
            check_lebesgue(q)?;
            check_power(beta)?;
            let op = OperatorSymbol::new(OperatorKind::EllipticGamma, grid, beta).with_scales(*scales);
            Ok(lebesgue(&apply_operator(&op, &f.without_mean())?, q))
        }
        NormRequest::Zgamma { gamma, r } => {
            check_lebesgue(r)?;
            check_power(gamma)?;
            let op = OperatorSymbol::new(OperatorKind::LaplaceB, grid, gamma).with_scales(*scales);
            Ok(lebesgue(&apply_operator(&op, &f.without_mean())?, r))
        }
    }
}

/// Grid quadrature of `|f|^s` (Euclidean modulus over components). For `s = 2`
/// the discrete Parseval identity gives the same value from the coefficients.
pub(crate) fn lebesgue(f: &SpectralField, s: f64) -> f64 {
    if s == 2.0 {
        return f.l2_norm();
    }
    let phys = to_physical(f);
    let grid = f.grid();
    let npts = grid.points();
    let comps = f.components();
    let mut acc = 0.0;
    for idx in 0..npts {
        let sq: f64 = (0..comps).map(|c| phys.data[c * npts + idx].powi(2)).sum();
        acc += sq.powf(0.5 * s);
    }
    (acc * grid.volume() / npts as f64).powf(1.0 / s)
}

fn multi_indices(dim: usize, k: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for order in 0..=k {
        for a in 0..=order {
            for b in 0..=(order - a) {
                let c = order - a - b;
                if (dim == 2 && c != 0) || (dim < 2 && (b != 0 || c != 0)) {
                    continue;
                }
                out.push([a, b, c]);
            }
        }
    }
    out
}
