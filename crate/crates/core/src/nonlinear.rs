//! Transport, the dissipation function `Φ` and the right-hand sides `F`, `G`, `H`.
//!
//! Products are formed on the collocation grid and truncated to the retained
//! wavevector box afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::spectral::{leray_project, to_physical, to_spectral, OperatorScales, PhysicalField, SpectralField};

fn default_rho() -> f64 {
    1.0
}
fn default_mu() -> f64 {
    0.5
}
fn default_mu_r() -> f64 {
    0.5
}
fn default_c0() -> f64 {
    0.5
}
fn default_ca() -> f64 {
    0.25
}
fn default_cd() -> f64 {
    0.75
}
fn default_one() -> f64 {
    1.0
}

/// Physical coefficients of the system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingParams {
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_mu_r")]
    pub mu_r: f64,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_ca")]
    pub ca: f64,
    #[serde(default = "default_cd")]
    pub cd: f64,
    #[serde(default = "default_one")]
    pub kappa: f64,
    #[serde(default = "default_one")]
    pub cv: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        CouplingParams {
            mu: default_mu(),
            mu_r: default_mu_r(),
            c0: default_c0(),
            ca: default_ca(),
            cd: default_cd(),
            kappa: 1.0,
            cv: 1.0,
            rho: default_rho(),
        }
    }
}

impl CouplingParams {
    /// Defaults with `μ_r` replaced and `μ = 1 - μ_r`.
    pub fn with_mu_r(mu_r: f64) -> Self {
        CouplingParams {
            mu: 1.0 - mu_r,
            mu_r,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("params.mu", self.mu),
            ("params.c0", self.c0),
            ("params.ca", self.ca),
            ("params.cd", self.cd),
            ("params.kappa", self.kappa),
            ("params.cv", self.cv),
            ("params.rho", self.rho),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mu_r >= 0.0 && self.mu_r.is_finite()) {
            return Err(config(format!("params.mu_r must be nonnegative, got {}", self.mu_r)));
        }
        if self.c0 + self.cd <= self.ca {
            return Err(config("params: c0 + cd must exceed ca"));
        }
        Ok(())
    }

    /// Symbol multipliers of `A`, `Γ`, `B`.
    pub fn scales(&self) -> OperatorScales {
        OperatorScales {
            a: (self.mu + self.mu_r) / self.rho,
            gamma_transverse: (self.ca + self.cd) / self.rho,
            gamma_longitudinal: (self.c0 + 2.0 * self.cd) / self.rho,
            b: self.kappa / (self.rho * self.cv),
        }
    }
}

/// Buoyancy-type forcing `θ ↦ c φ(θ)` with `φ(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    Zero,
    Linear { c: [f64; 3] },
    SaturatingTanh { c: [f64; 3], scale: f64 },
}

impl ForcingSpec {
    pub fn validate(&self, path: &str) -> Result<()> {
        let c = match self {
            ForcingSpec::Zero => return Ok(()),
            ForcingSpec::Linear { c } => c,
            ForcingSpec::SaturatingTanh { c, scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(config(format!("{path}.scale must be positive, got {scale}")));
                }
                c
            }
        };
        if c.iter().any(|x| !x.is_finite()) {
            return Err(config(format!("{path}.c must be finite")));
        }
        Ok(())
    }

    /// Pointwise value at temperature `theta`.
    pub fn eval(&self, theta: f64) -> [f64; 3] {
        match *self {
            ForcingSpec::Zero => [0.0; 3],
            ForcingSpec::Linear { c } => c.map(|ci| ci * theta),
            ForcingSpec::SaturatingTanh { c, scale } => {
                let s = (scale * theta).tanh();
                c.map(|ci| ci * s)
            }
        }
    }

    /// Lipschitz constant with respect to the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            ForcingSpec::Zero => 0.0,
            ForcingSpec::Linear { c } => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
            ForcingSpec::SaturatingTanh { c, scale } => c.iter().map(|x| x * x).sum::<f64>().sqrt() * scale,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            ForcingSpec::Zero => true,
            ForcingSpec::Linear { c } | ForcingSpec::SaturatingTanh { c, .. } => c.iter().all(|x| *x == 0.0),
        }
    }

    /// The vector field `x ↦ forcing(θ(x))`, truncated.
    pub fn apply(&self, theta: &SpectralField) -> Result<SpectralField> {
        if theta.components() != 1 {
            return Err(Error::Type("forcing acts on a scalar temperature".into()));
        }
        let grid = *theta.grid();
        match *self {
            ForcingSpec::Zero => Ok(SpectralField::vector_zeros(grid)),
            ForcingSpec::Linear { c } => {
                let parts = [theta.scale(c[0]), theta.scale(c[1]), theta.scale(c[2])];
                SpectralField::stack([&parts[0], &parts[1], &parts[2]])
            }
            ForcingSpec::SaturatingTanh { .. } => {
                let phys = to_physical(theta);
                let n = grid.points();
                let mut out = PhysicalField::zeros(grid, 3);
                for idx in 0..n {
                    let v = self.eval(phys.data[idx]);
                    for a in 0..3 {
                        out.data[a * n + idx] = v[a];
                    }
                }
                Ok(to_spectral(&out)?.dealiased())
            }
        }
    }
}

fn check_grid(a: &SpectralField, b: &SpectralField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(config("grid mismatch between fields"));
    }
    Ok(())
}

fn require_vector(f: &SpectralField, what: &str) -> Result<()> {
    if f.components() != 3 {
        return Err(Error::Type(format!("{what} must be a vector field")));
    }
    Ok(())
}

/// Physical samples of `∂_a f` for each axis (zero beyond the grid dimension).
struct GradSamples {
    d: [Option<PhysicalField>; 3],
}

impl GradSamples {
    fn new(f: &SpectralField) -> Self {
        let dim = f.grid().dim;
        let d = std::array::from_fn(|a| (a < dim).then(|| to_physical(&f.derivative(a))));
        GradSamples { d }
    }

    /// `∂_axis f_c` at point `idx`.
    #[inline]
    fn at(&self, c: usize, axis: usize, idx: usize, n: usize) -> f64 {
        match &self.d[axis] {
            Some(p) => p.data[c * n + idx],
            None => 0.0,
        }
    }

    /// Full 3x3 gradient `g[i][j] = ∂_j f_i` of a vector field.
    #[inline]
    fn matrix(&self, idx: usize, n: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.at(i, j, idx, n)))
    }
}

/// `(u·∇)w`, truncated.
pub fn advect(u: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    check_grid(u, w)?;
    require_vector(u, "transport velocity")?;
    let grid = *u.grid();
    let n = grid.points();
    let up = to_physical(u);
    let gw = GradSamples::new(w);
    let comps = w.components();
    let mut out = PhysicalField::zeros(grid, comps);
    for idx in 0..n {
        let uu = [up.data[idx], up.data[n + idx], up.data[2 * n + idx]];
        for c in 0..comps {
            let mut s = 0.0;
            for (j, uj) in uu.iter().enumerate() {
                s += uj * gw.at(c, j, idx, n);
            }
            out.data[c * n + idx] = s;
        }
    }
    Ok(to_spectral(&out)?.dealiased())
}

/// Pointwise `Φ(u,v;ω,ψ)` from gradients `g[i][j] = ∂_j f_i` and values of `ω`, `ψ`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub fn phi_pointwise(
    gu: &[[f64; 3]; 3],
    gv: &[[f64; 3]; 3],
    w: &[f64; 3],
    psi: &[f64; 3],
    gw: &[[f64; 3]; 3],
    gpsi: &[[f64; 3]; 3],
    p: &CouplingParams,
) -> f64 {
    let mut dd = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let du = 0.5 * (gu[i][j] + gu[j][i]);
            let dv = 0.5 * (gv[i][j] + gv[j][i]);
            dd += du * dv;
        }
    }
    let rot = |g: &[[f64; 3]; 3]| [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]];
    let ru = rot(gu);
    let rv = rot(gv);
    let mut spin = 0.0;
    for i in 0..3 {
        spin += (0.5 * ru[i] - w[i]) * (0.5 * rv[i] - psi[i]);
    }
    let divw = gw[0][0] + gw[1][1] + gw[2][2];
    let divpsi = gpsi[0][0] + gpsi[1][1] + gpsi[2][2];
    let mut full = 0.0;
    let mut cross = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            full += gw[i][j] * gpsi[i][j];
            cross += gw[i][j] * gpsi[j][i];
        }
    }
    2.0 * p.mu * dd
        + 4.0 * p.mu_r * spin
        + p.c0 * divw * divpsi
        + (p.ca + p.cd) * full
        + (p.cd - p.ca) * cross
}

/// Grid samples of `Φ(u,v;ω,ψ)` (no truncation).
pub fn dissipation_phi_physical(
    u: &SpectralField,
    v: &SpectralField,
    omega: &SpectralField,
    psi: &SpectralField,
    params: &CouplingParams,
) -> Result<PhysicalField> {
    for f in [v, omega, psi] {
        check_grid(u, f)?;
    }
    for (f, name) in [(u, "u"), (v, "v"), (omega, "ω"), (psi, "ψ")] {
        require_vector(f, name)?;
    }
    let grid = *u.grid();
    let n = grid.points();
    let gu = GradSamples::new(u);
    let gv = GradSamples::new(v);
    let gw = GradSamples::new(omega);
    let gp = GradSamples::new(psi);
    let wp = to_physical(omega);
    let pp = to_physical(psi);
    let mut out = PhysicalField::zeros(grid, 1);
    for idx in 0..n {
        let w = [wp.data[idx], wp.data[n + idx], wp.data[2 * n + idx]];
        let ps = [pp.data[idx], pp.data[n + idx], pp.data[2 * n + idx]];
        out.data[idx] = phi_pointwise(
            &gu.matrix(idx, n),
            &gv.matrix(idx, n),
            &w,
            &ps,
            &gw.matrix(idx, n),
            &gp.matrix(idx, n),
            params,
        );
    }
    Ok(out)
}

/// `Φ(u,v;ω,ψ)` as a truncated scalar field.
pub fn dissipation_phi(
    u: &SpectralField,
    v: &SpectralField,
    omega: &SpectralField,
    psi: &SpectralField,
    params: &CouplingParams,
) -> Result<SpectralField> {
    Ok(to_spectral(&dissipation_phi_physical(u, v, omega, psi, params)?)?.dealiased())
}

/// Right-hand sides of the abstract evolution problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Rhs {
    pub f: SpectralField,
    pub g: SpectralField,
    pub h: SpectralField,
}

/// Which terms of the right-hand side to include.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RhsOptions {
    /// Drop transport and `Φ`, keeping the linear coupling and forcing.
    #[serde(default)]
    pub linear_only: bool,
}

/// Relative divergence tolerance accepted for a "solenoidal" velocity.
pub const SOLENOIDAL_TOL: f64 = 1e-9;

pub(crate) fn check_solenoidal(u: &SpectralField) -> Result<()> {
    let div = u.divergence()?.l2_norm();
    let modes = u.grid().modes();
    let n = u.grid().points();
    let mut acc = 0.0;
    for c in 0..3 {
        for idx in 0..n {
            acc += modes.k2[idx] * u.coeffs()[c * n + idx].norm_sqr();
        }
    }
    let scale = (acc * u.grid().volume()).sqrt();
    if div > SOLENOIDAL_TOL * scale.max(f64::MIN_POSITIVE) && div > 1e-300 {
        return Err(Error::Precondition(format!(
            "velocity is not solenoidal: ‖div u‖ = {div:.3e}, ‖∇u‖ = {scale:.3e}"
        )));
    }
    Ok(())
}

/// `F = -P(u·∇)u + (2μ_r/ρ) P rot ω + P f(θ)`,
/// `G = -(u·∇)ω - (4μ_r/ρ) ω + (2μ_r/ρ) rot u + g(θ)`,
/// `H = -(u·∇)θ + Φ(u;ω)/(ρ c_v)`.
pub fn assemble_rhs(
    u: &SpectralField,
    omega: &SpectralField,
    theta: &SpectralField,
    params: &CouplingParams,
    f: &ForcingSpec,
    g: &ForcingSpec,
) -> Result<Rhs> {
    assemble_rhs_with(u, omega, theta, params, f, g, RhsOptions::default())
}

pub fn assemble_rhs_with(
    u: &SpectralField,
    omega: &SpectralField,
    theta: &SpectralField,
    params: &CouplingParams,
    f: &ForcingSpec,
    g: &ForcingSpec,
    opts: RhsOptions,
) -> Result<Rhs> {
    check_grid(u, omega)?;
    check_grid(u, theta)?;
    require_vector(u, "u")?;
    require_vector(omega, "ω")?;
    if theta.components() != 1 {
        return Err(Error::Type("θ must be a scalar field".into()));
    }
    check_solenoidal(u)?;
    let grid = *u.grid();
    let rho = params.rho;
    let spin = 2.0 * params.mu_r / rho;

    let mut fv = omega.curl()?.scale(spin);
    let mut gv = u.curl()?.scale(spin).axpy(-2.0 * spin, omega)?;
    let mut hv = SpectralField::scalar_zeros(grid);

    if !f.is_zero() {
        fv = fv.add(&f.apply(theta)?)?;
    }
    if !g.is_zero() {
        gv = gv.add(&g.apply(theta)?)?;
    }

    if !opts.linear_only {
        let n = grid.points();
        let up = to_physical(u);
        let wp = to_physical(omega);
        let gu = GradSamples::new(u);
        let gw = GradSamples::new(omega);
        let gt = GradSamples::new(theta);
        let mut adv_u = PhysicalField::zeros(grid, 3);
        let mut adv_w = PhysicalField::zeros(grid, 3);
        let mut heat = PhysicalField::zeros(grid, 1);
        let inv = 1.0 / (rho * params.cv);
        for idx in 0..n {
            let uu = [up.data[idx], up.data[n + idx], up.data[2 * n + idx]];
            let ww = [wp.data[idx], wp.data[n + idx], wp.data[2 * n + idx]];
            let mu_ = gu.matrix(idx, n);
            let mw = gw.matrix(idx, n);
            for i in 0..3 {
                let mut su = 0.0;
                let mut sw = 0.0;
                for j in 0..3 {
                    su += uu[j] * mu_[i][j];
                    sw += uu[j] * mw[i][j];
                }
                adv_u.data[i * n + idx] = su;
                adv_w.data[i * n + idx] = sw;
            }
            let mut st = 0.0;
            for (j, uj) in uu.iter().enumerate() {
                st += uj * gt.at(0, j, idx, n);
            }
            let phi = phi_pointwise(&mu_, &mu_, &ww, &ww, &mw, &mw, params);
            heat.data[idx] = -st + inv * phi;
        }
        fv = fv.sub(&to_spectral(&adv_u)?.dealiased())?;
        gv = gv.sub(&to_spectral(&adv_w)?.dealiased())?;
        hv = to_spectral(&heat)?.dealiased();
    }

    Ok(Rhs {
        f: leray_project(&fv)?.dealiased(),
        g: gv.dealiased(),
        h: hv,
    })
}

/// `E = ρ/2 ‖u‖² + ρ/2 ‖ω‖² + ρ c_v ∫θ`, conserved without forcing.
pub fn total_energy(u: &SpectralField, omega: &SpectralField, theta: &SpectralField, p: &CouplingParams) -> f64 {
    let vol = theta.grid().volume();
    0.5 * p.rho * (u.l2_norm().powi(2) + omega.l2_norm().powi(2)) + p.rho * p.cv * theta.mean()[0] * vol
}

/// `ρ/2 ‖u‖² + ρ/2 ‖ω‖²`.
pub fn kinetic_energy(u: &SpectralField, omega: &SpectralField, p: &CouplingParams) -> f64 {
    0.5 * p.rho * (u.l2_norm().powi(2) + omega.l2_norm().powi(2))
}
