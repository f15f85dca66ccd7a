use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{leray_project, SpectralField};
use super::grid::{lambda1, GridSpec};
use crate::error::{domain, Error, Result};

/// The three generators of the linear part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    /// Stokes operator `A = -(μ+μ_r)/ρ PΔ` on solenoidal vector fields.
    StokesA,
    /// `Γ = -((c_a+c_d)Δ + (c_0+c_d-c_a)∇div)/ρ` on vector fields.
    EllipticGamma,
    /// `B = -κ/(ρ c_v) Δ` on scalar fields.
    LaplaceB,
}

/// Multipliers of `|κ|²` in each symbol. [`Default`] is the unit normalization,
/// where `A` and `B` are `|κ|²` and `Γ` is `|κ|²` (transverse) or `2|κ|²` (longitudinal).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorScales {
    pub a: f64,
    pub gamma_transverse: f64,
    pub gamma_longitudinal: f64,
    pub b: f64,
}

impl Default for OperatorScales {
    fn default() -> Self {
        OperatorScales {
            a: 1.0,
            gamma_transverse: 1.0,
            gamma_longitudinal: 2.0,
            b: 1.0,
        }
    }
}

impl OperatorScales {
    /// Smallest eigenvalue of the generator on mean-zero fields.
    pub fn min_eigenvalue(&self, kind: OperatorKind, grid: &GridSpec) -> f64 {
        let l1 = lambda1(grid);
        match kind {
            OperatorKind::StokesA => self.a * l1,
            OperatorKind::EllipticGamma => self.gamma_transverse.min(self.gamma_longitudinal) * l1,
            OperatorKind::LaplaceB => self.b * l1,
        }
    }
}

/// A generator raised to a real power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorSymbol {
    pub kind: OperatorKind,
    pub grid: GridSpec,
    pub power: f64,
    pub scales: OperatorScales,
}

impl OperatorSymbol {
    pub fn new(kind: OperatorKind, grid: GridSpec, power: f64) -> Self {
        OperatorSymbol {
            kind,
            grid,
            power,
            scales: OperatorScales::default(),
        }
    }

    pub fn with_scales(mut self, scales: OperatorScales) -> Self {
        self.scales = scales;
        self
    }

    /// The generator itself (power 1).
    pub fn generator(kind: OperatorKind, grid: GridSpec, scales: OperatorScales) -> Self {
        Self::new(kind, grid, 1.0).with_scales(scales)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.scales.min_eigenvalue(self.kind, &self.grid)
    }
}

/// Applies `g(eigenvalue)` on every spectral subspace of the generator `kind`.
///
/// For `Γ` the symbol splits each mode into the span of `k` and its orthogonal
/// complement; `A` and `B` act as scalars on every component.
pub(crate) fn apply_spectral_fn(
    kind: OperatorKind,
    scales: &OperatorScales,
    f: &SpectralField,
    g: impl Fn(f64) -> f64,
) -> SpectralField {
    let grid = *f.grid();
    let modes = grid.modes();
    let n = grid.points();
    let mut out = f.clone();
    let comps = f.components();
    let src = f.coeffs();
    let dst = out.coeffs_mut();
    match kind {
        OperatorKind::StokesA | OperatorKind::LaplaceB => {
            let s = if kind == OperatorKind::StokesA { scales.a } else { scales.b };
            for idx in 0..n {
                let m = g(s * modes.k2[idx]);
                for c in 0..comps {
                    dst[c * n + idx] = src[c * n + idx] * m;
                }
            }
        }
        OperatorKind::EllipticGamma => {
            for idx in 0..n {
                let k2 = modes.k2[idx];
                let gt = g(scales.gamma_transverse * k2);
                if k2 == 0.0 {
                    for c in 0..comps {
                        dst[c * n + idx] = src[c * n + idx] * gt;
                    }
                    continue;
                }
                let gl = g(scales.gamma_longitudinal * k2);
                let k = modes.kvec[idx];
                let mut kv = Complex64::new(0.0, 0.0);
                for a in 0..3 {
                    kv += src[a * n + idx] * k[a];
                }
                let corr = kv * ((gl - gt) / k2);
                for a in 0..3 {
                    dst[a * n + idx] = src[a * n + idx] * gt + corr * k[a];
                }
            }
        }
    }
    out
}

/// `(μ, ‖Π_μ f‖₂²)` for every eigenvalue `μ` of the generator `kind`, sorted by `μ`,
/// with equal eigenvalues merged. `‖g(Λ)f‖₂² = Σ g(μ)² ‖Π_μ f‖₂²`.
pub fn spectral_shells(kind: OperatorKind, scales: &OperatorScales, f: &SpectralField) -> Vec<(f64, f64)> {
    let grid = *f.grid();
    let modes = grid.modes();
    let n = grid.points();
    let comps = f.components();
    let c = f.coeffs();
    let vol = grid.volume();
    let mut raw: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for idx in 0..n {
        let k2 = modes.k2[idx];
        let e: f64 = (0..comps).map(|a| c[a * n + idx].norm_sqr()).sum::<f64>() * vol;
        match kind {
            OperatorKind::StokesA => raw.push((scales.a * k2, e)),
            OperatorKind::LaplaceB => raw.push((scales.b * k2, e)),
            OperatorKind::EllipticGamma if k2 == 0.0 => raw.push((0.0, e)),
            OperatorKind::EllipticGamma => {
                let k = modes.kvec[idx];
                let mut kv = Complex64::new(0.0, 0.0);
                for a in 0..3 {
                    kv += c[a * n + idx] * k[a];
                }
                let el = (kv.norm_sqr() / k2 * vol).min(e);
                raw.push((scales.gamma_longitudinal * k2, el));
                raw.push((scales.gamma_transverse * k2, e - el));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (mu, e) in raw {
        match out.last_mut() {
            Some(last) if last.0 == mu => last.1 += e,
            _ => out.push((mu, e)),
        }
    }
    out
}

fn check_components(kind: OperatorKind, f: &SpectralField) -> Result<()> {
    match kind {
        OperatorKind::StokesA | OperatorKind::EllipticGamma if f.components() != 3 => Err(Error::Type(
            format!("{kind:?} acts on vector fields, got {} component(s)", f.components()),
        )),
        _ => Ok(()),
    }
}

fn mean_is_negligible(f: &SpectralField) -> bool {
    let scale = f.coeff_norm();
    f.mean().iter().all(|m| m.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE))
}

/// Multiplies every spectral subspace by `eigenvalue^power`.
///
/// `A^α` projects onto solenoidal fields first. Negative powers require a
/// mean-zero input.
pub fn apply_operator(op: &OperatorSymbol, f: &SpectralField) -> Result<SpectralField> {
    check_components(op.kind, f)?;
    if !op.power.is_finite() {
        return Err(domain(format!("operator power must be finite, got {}", op.power)));
    }
    let zero_mean = f.mean_zero() || mean_is_negligible(f);
    if op.power < 0.0 && !zero_mean {
        return Err(Error::Singular(format!(
            "negative power {} of {:?} on a field with nonzero mean",
            op.power, op.kind
        )));
    }
    if op.kind == OperatorKind::StokesA && !zero_mean {
        return Err(Error::Precondition(
            "the Stokes operator acts on mean-zero vector fields".into(),
        ));
    }
    let input = if op.kind == OperatorKind::StokesA {
        leray_project(f)?
    } else if op.power < 0.0 {
        f.without_mean()
    } else {
        f.clone()
    };
    let p = op.power;
    let mut out = if p == 0.0 {
        input
    } else {
        apply_spectral_fn(op.kind, &op.scales, &input, |mu| if mu == 0.0 { 0.0 } else { mu.powf(p) })
    };
    out.set_mean_zero_flag(p != 0.0 || out.mean_zero());
    Ok(out)
}

/// Applies `e^{-tΛ}` for the generator `Λ` of `op` (which must have power 1).
pub fn semigroup_apply(op: &OperatorSymbol, t: f64, f: &SpectralField) -> Result<SpectralField> {
    check_components(op.kind, f)?;
    if op.power != 1.0 {
        return Err(domain(format!(
            "semigroup requires the generator (power 1), got power {}",
            op.power
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("semigroup time must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(apply_spectral_fn(op.kind, &op.scales, f, |mu| (-t * mu).exp()))
}

/// Weights of one exponential-trapezoid step of length `h` for eigenvalue `mu`:
/// `(e^{-hμ}, w_old, w_new)` with `∫_0^h e^{-(h-s)μ} N(s) ds = w_old N(0) + w_new N(h)`
/// exact for `N` linear in `s`.
pub(crate) fn step_weights(mu: f64, h: f64) -> (f64, f64, f64) {
    let x = mu * h;
    let phi1 = if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x };
    let g = if x.abs() < 0.5 {
        // Σ (-1)^n (n+1)/(n+2)! x^n
        let mut sum = 0.0;
        let mut fact = 2.0;
        let mut pow = 1.0;
        for n in 0..20 {
            let term = (n as f64 + 1.0) / fact * pow;
            sum += if n % 2 == 0 { term } else { -term };
            fact *= n as f64 + 3.0;
            pow *= x;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    };
    ((-x).exp(), h * g, h * (phi1 - g))
}

/// `e^{-hΛ} prev + w_old(Λ) n_old + w_new(Λ) n_new`, mode by mode.
pub(crate) fn exponential_step(
    kind: OperatorKind,
    scales: &OperatorScales,
    prev: &SpectralField,
    n_old: &SpectralField,
    n_new: &SpectralField,
    h: f64,
) -> SpectralField {
    let grid = *prev.grid();
    let modes = grid.modes();
    let n = grid.points();
    let comps = prev.components();
    let mut out = prev.clone();
    let (p, a, b) = (prev.coeffs(), n_old.coeffs(), n_new.coeffs());
    let dst = out.coeffs_mut();
    match kind {
        OperatorKind::StokesA | OperatorKind::LaplaceB => {
            let s = if kind == OperatorKind::StokesA { scales.a } else { scales.b };
            for idx in 0..n {
                let (e, wo, wn) = step_weights(s * modes.k2[idx], h);
                for c in 0..comps {
                    let i = c * n + idx;
                    dst[i] = p[i] * e + a[i] * wo + b[i] * wn;
                }
            }
        }
        OperatorKind::EllipticGamma => {
            for idx in 0..n {
                let k2 = modes.k2[idx];
                let (et, wot, wnt) = step_weights(scales.gamma_transverse * k2, h);
                for c in 0..comps {
                    let i = c * n + idx;
                    dst[i] = p[i] * et + a[i] * wot + b[i] * wnt;
                }
                if k2 == 0.0 {
                    continue;
                }
                let (el, wol, wnl) = step_weights(scales.gamma_longitudinal * k2, h);
                let k = modes.kvec[idx];
                let mut kp = Complex64::new(0.0, 0.0);
                let mut ka = kp;
                let mut kb = kp;
                for d in 0..3 {
                    kp += p[d * n + idx] * k[d];
                    ka += a[d * n + idx] * k[d];
                    kb += b[d * n + idx] * k[d];
                }
                let corr = (kp * (el - et) + ka * (wol - wot) + kb * (wnl - wnt)) / k2;
                for d in 0..3 {
                    dst[d * n + idx] += corr * k[d];
                }
            }
        }
    }
    let mz = prev.mean_zero() && n_old.mean_zero() && n_new.mean_zero();
    out.set_mean_zero_flag(mz || out.mean().iter().all(|m| *m == 0.0));
    out
}
