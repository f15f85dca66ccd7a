//! Mild solutions by successive approximation.
//!
//! A trajectory is a set of fields sampled on a time grid. Duhamel integrals
//! use exact per-mode exponential weights with the integrand interpolated
//! linearly between nodes, and the Picard map is applied to whole trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::exponents::{Branches, ExponentConfig, Intermediates};
use crate::nonlinear::{assemble_rhs_with, check_solenoidal, CouplingParams, ForcingSpec, Rhs, RhsOptions};
use crate::par::Exec;
use crate::spectral::{
    exponential_step, norm_with, semigroup_apply, GridSpec, NormRequest, OperatorKind, OperatorScales, OperatorSymbol,
    SpectralField,
};

/// Euler beta function `B(x, y) = Γ(x)Γ(y)/Γ(x+y)`.
pub fn beta_function(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(domain(format!("beta function needs positive arguments, got B({x}, {y})")));
    }
    use statrs::function::gamma::ln_gamma;
    Ok((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp())
}

/// Smoothing constant `sup_{μ≥μ_min} sup_t t^a μ^a e^{-(μ-λ)t} = (a/e)^a (μ_min/(μ_min-λ))^a`.
pub fn semigroup_constant(a: f64, mu_min: f64, lambda: f64) -> Result<f64> {
    if !(lambda < mu_min) {
        return Err(domain(format!("decay rate {lambda} must stay below the first eigenvalue {mu_min}")));
    }
    if a < 0.0 {
        return Err(domain(format!("smoothing exponent must be nonnegative, got {a}")));
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    Ok((a / std::f64::consts::E).powf(a) * (mu_min / (mu_min - lambda)).powf(a))
}

/// Physical parameters together with both forcings.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    #[serde(default)]
    pub params: CouplingParams,
    #[serde(default)]
    pub f: ForcingSpec,
    #[serde(default)]
    pub g: ForcingSpec,
}

impl Model {
    pub fn new(params: CouplingParams, f: ForcingSpec, g: ForcingSpec) -> Self {
        Model { params, f, g }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.f.validate("forcings.f")?;
        self.g.validate("forcings.g")
    }

    fn generator(&self, kind: OperatorKind, grid: GridSpec) -> OperatorSymbol {
        OperatorSymbol::generator(kind, grid, self.params.scales())
    }
}

fn default_m_max() -> usize {
    30
}

fn default_tol() -> f64 {
    1e-9
}

/// Discretization and stopping rule of the successive approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    /// Horizon `T`.
    pub t_final: f64,
    pub nodes_per_unit: usize,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Exponents whose weighted norms measure convergence; plain `L²` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighted_exponents: Option<ExponentConfig>,
    /// Nodes `t_j = T (j/J)²` instead of uniform.
    #[serde(default)]
    pub graded: bool,
    #[serde(default)]
    pub linear_only: bool,
    #[serde(default)]
    pub exec: Exec,
}

impl PicardConfig {
    pub fn new(t_final: f64, nodes_per_unit: usize) -> Self {
        PicardConfig {
            t_final,
            nodes_per_unit,
            m_max: default_m_max(),
            tol: default_tol(),
            weighted_exponents: None,
            graded: false,
            linear_only: false,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(config(format!("picard.t_final must be positive, got {}", self.t_final)));
        }
        if self.nodes_per_unit == 0 {
            return Err(config("picard.nodes_per_unit must be at least 1"));
        }
        if self.m_max == 0 {
            return Err(config("picard.m_max must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(config(format!("picard.tol must be positive, got {}", self.tol)));
        }
        if let Some(e) = &self.weighted_exponents {
            e.validate_fields()?;
        }
        Ok(())
    }

    /// Number of steps `J`.
    pub fn steps(&self) -> usize {
        ((self.t_final * self.nodes_per_unit as f64).round() as usize).max(1)
    }

    /// Node times `0 = t_0 < … < t_J = T`.
    pub fn times(&self) -> Vec<f64> {
        let j = self.steps();
        (0..=j)
            .map(|i| {
                let s = i as f64 / j as f64;
                if i == j {
                    self.t_final
                } else if self.graded {
                    self.t_final * s * s
                } else {
                    self.t_final * s
                }
            })
            .collect()
    }

    fn options(&self) -> RhsOptions {
        RhsOptions {
            linear_only: self.linear_only,
        }
    }
}

/// One iterate of the successive approximation on the time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub times: Vec<f64>,
    pub u: Vec<SpectralField>,
    pub omega: Vec<SpectralField>,
    pub theta: Vec<SpectralField>,
    /// `F, G, H` evaluated on this iterate.
    pub rhs: Vec<Rhs>,
    pub m: usize,
}

impl TrajectoryState {
    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn grid(&self) -> GridSpec {
        *self.u[0].grid()
    }

    /// Fields at node `j`.
    pub fn state(&self, j: usize) -> (&SpectralField, &SpectralField, &SpectralField) {
        (&self.u[j], &self.omega[j], &self.theta[j])
    }

    pub fn last(&self) -> (&SpectralField, &SpectralField, &SpectralField) {
        self.state(self.nodes() - 1)
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("nonempty grid")
    }

    /// Node index of `t`, matched to relative precision 1e-12.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        node_of(&self.times, t)
    }

    /// Copy with every time shifted by `dt`.
    pub fn shifted(&self, dt: f64) -> Self {
        let mut out = self.clone();
        out.times.iter_mut().for_each(|t| *t += dt);
        out
    }

    /// Builds a state from node fields, recomputing the right-hand sides.
    pub fn from_nodes(
        times: Vec<f64>,
        u: Vec<SpectralField>,
        omega: Vec<SpectralField>,
        theta: Vec<SpectralField>,
        m: usize,
        model: &Model,
        opts: RhsOptions,
        exec: Exec,
    ) -> Result<Self> {
        if times.is_empty() || u.len() != times.len() || omega.len() != times.len() || theta.len() != times.len() {
            return Err(config("trajectory: node counts of times and fields differ"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config("trajectory: times must be strictly increasing"));
        }
        let rhs = compute_rhs(&u, &omega, &theta, model, opts, exec)?;
        Ok(TrajectoryState {
            times,
            u,
            omega,
            theta,
            rhs,
            m,
        })
    }
}

fn node_of(times: &[f64], t: f64) -> Option<usize> {
    let scale = times.last().map(|x| x.abs()).unwrap_or(1.0).max(1.0);
    times.iter().position(|s| (s - t).abs() <= 1e-12 * scale)
}

fn compute_rhs(
    u: &[SpectralField],
    omega: &[SpectralField],
    theta: &[SpectralField],
    model: &Model,
    opts: RhsOptions,
    exec: Exec,
) -> Result<Vec<Rhs>> {
    exec.map_range(u.len(), |j| {
        assemble_rhs_with(&u[j], &omega[j], &theta[j], &model.params, &model.f, &model.g, opts)
    })
    .into_iter()
    .collect()
}

fn check_initial(u0: &SpectralField, omega0: &SpectralField, theta0: &SpectralField) -> Result<()> {
    if !u0.is_vector() || !omega0.is_vector() {
        return Err(Error::Type("u₀ and ω₀ must be vector fields".into()));
    }
    if theta0.components() != 1 {
        return Err(Error::Type("θ₀ must be a scalar field".into()));
    }
    u0.check_compatible(omega0)?;
    if u0.grid() != theta0.grid() {
        return Err(config("initial fields live on different grids"));
    }
    if u0.mean().iter().any(|m| m.abs() > 1e-12 * u0.coeff_norm().max(f64::MIN_POSITIVE)) {
        return Err(Error::Precondition("u₀ must have zero mean".into()));
    }
    check_solenoidal(u0)
}

/// `(e^{-tA}u₀, e^{-tΓ}ω₀, e^{-tB}θ₀)` at every node.
fn free_evolution(
    u0: &SpectralField,
    omega0: &SpectralField,
    theta0: &SpectralField,
    times: &[f64],
    model: &Model,
    exec: Exec,
) -> Result<Vec<(SpectralField, SpectralField, SpectralField)>> {
    let grid = *u0.grid();
    let a = model.generator(OperatorKind::StokesA, grid);
    let g = model.generator(OperatorKind::EllipticGamma, grid);
    let b = model.generator(OperatorKind::LaplaceB, grid);
    exec.map(times, |&t| {
        Ok((
            semigroup_apply(&a, t, u0)?,
            semigroup_apply(&g, t, omega0)?,
            semigroup_apply(&b, t, theta0)?,
        ))
    })
    .into_iter()
    .collect()
}

/// The zeroth iterate: free semigroup evolution of the initial data.
pub fn initial_trajectory(
    u0: &SpectralField,
    omega0: &SpectralField,
    theta0: &SpectralField,
    cfg: &PicardConfig,
    model: &Model,
) -> Result<TrajectoryState> {
    cfg.validate()?;
    check_initial(u0, omega0, theta0)?;
    initial_on_grid(u0, omega0, theta0, cfg.times(), cfg, model)
}

fn initial_on_grid(
    u0: &SpectralField,
    omega0: &SpectralField,
    theta0: &SpectralField,
    times: Vec<f64>,
    cfg: &PicardConfig,
    model: &Model,
) -> Result<TrajectoryState> {
    let (u0, omega0, theta0) = (u0.clone().dealiased(), omega0.clone().dealiased(), theta0.clone().dealiased());
    let free = free_evolution(&u0, &omega0, &theta0, &times, model, cfg.exec)?;
    let mut u = Vec::with_capacity(times.len());
    let mut omega = Vec::with_capacity(times.len());
    let mut theta = Vec::with_capacity(times.len());
    for (a, b, c) in free {
        u.push(a);
        omega.push(b);
        theta.push(c);
    }
    TrajectoryState::from_nodes(times, u, omega, theta, 0, model, cfg.options(), cfg.exec)
}

/// `∫_0^{t_j} e^{-(t_j-s)Λ} N(s) ds` at every node, for `N` linear between nodes.
pub fn duhamel_trajectory(
    op: &OperatorSymbol,
    forcing: &[SpectralField],
    times: &[f64],
) -> Result<Vec<SpectralField>> {
    if op.power != 1.0 {
        return Err(domain(format!("Duhamel integral needs the generator (power 1), got power {}", op.power)));
    }
    if forcing.len() != times.len() || times.is_empty() {
        return Err(config("Duhamel integral: forcing samples and times differ in length"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config("Duhamel integral: times must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(times.len());
    out.push(SpectralField::zeros(*forcing[0].grid(), forcing[0].components()));
    for j in 0..times.len() - 1 {
        let next = exponential_step(op.kind, &op.scales, &out[j], &forcing[j], &forcing[j + 1], times[j + 1] - times[j]);
        out.push(next);
    }
    Ok(out)
}

/// `∫_0^t e^{-(t-s)Λ} N(s) ds` at a grid node `t`.
pub fn duhamel_integral(op: &OperatorSymbol, forcing: &[SpectralField], times: &[f64], t: f64) -> Result<SpectralField> {
    let j = node_of(times, t).ok_or_else(|| domain(format!("t = {t} is not a grid node; interpolation is not supported")))?;
    let mut all = duhamel_trajectory(op, &forcing[..=j.min(forcing.len().saturating_sub(1))], &times[..=j])?;
    Ok(all.pop().expect("nonempty"))
}

/// `u^{m+1} = u⁰ + ∫ e^{-(t-s)A} F(u^m, ω^m, θ^m) ds`, and likewise for `ω`, `θ`.
pub fn picard_step(traj: &TrajectoryState, cfg: &PicardConfig, model: &Model) -> Result<TrajectoryState> {
    let grid = traj.grid();
    let (u0, w0, t0) = traj.state(0);
    let free = free_evolution(u0, w0, t0, &traj.times, model, cfg.exec)?;
    let kinds = [OperatorKind::StokesA, OperatorKind::EllipticGamma, OperatorKind::LaplaceB];
    let integrals: Vec<Result<Vec<SpectralField>>> = cfg.exec.map_range(3, |i| {
        let forcing: Vec<SpectralField> = traj
            .rhs
            .iter()
            .map(|r| match i {
                0 => r.f.clone(),
                1 => r.g.clone(),
                _ => r.h.clone(),
            })
            .collect();
        duhamel_trajectory(&model.generator(kinds[i], grid), &forcing, &traj.times)
    });
    let mut it = integrals.into_iter();
    let (iu, iw, ith) = (it.next().unwrap()?, it.next().unwrap()?, it.next().unwrap()?);
    let mut u = Vec::with_capacity(traj.nodes());
    let mut omega = Vec::with_capacity(traj.nodes());
    let mut theta = Vec::with_capacity(traj.nodes());
    for (j, (a, b, c)) in free.into_iter().enumerate() {
        u.push(a.add(&iu[j])?);
        omega.push(b.add(&iw[j])?);
        theta.push(c.add(&ith[j])?);
    }
    TrajectoryState::from_nodes(traj.times.clone(), u, omega, theta, traj.m + 1, model, cfg.options(), cfg.exec)
}

/// Nodewise `max(‖u - e^{-tA}u₀ - 𝓕_u‖₂, …)`: how far the trajectory is from
/// solving the integral equations under the same quadrature.
pub fn mild_residual(traj: &TrajectoryState, cfg: &PicardConfig, model: &Model) -> Result<Vec<f64>> {
    let next = picard_step(traj, cfg, model)?;
    Ok((0..traj.nodes())
        .map(|j| {
            let du = next.u[j].sub(&traj.u[j]).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY);
            let dw = next.omega[j].sub(&traj.omega[j]).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY);
            let dt = next.theta[j].sub(&traj.theta[j]).map(|d| d.l2_norm()).unwrap_or(f64::INFINITY);
            du.max(dw).max(dt)
        })
        .collect())
}

/// Which field a weighted norm measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldTag {
    U,
    Omega,
    Theta,
}

/// `t^{e - e₀} ‖·‖_{space}` for one field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub field: FieldTag,
    pub exponent: f64,
    pub base: f64,
    pub norm: NormRequest,
}

impl WeightedNorm {
    pub fn tag(&self) -> String {
        let space = match self.field {
            FieldTag::U => "X",
            FieldTag::Omega => "Y",
            FieldTag::Theta => "Z",
        };
        let name = match self.field {
            FieldTag::U => "u",
            FieldTag::Omega => "omega",
            FieldTag::Theta => "theta",
        };
        format!("{name}:{space}^{}", fmt_exp(self.exponent))
    }

    pub fn eval(&self, f: &SpectralField, scales: &OperatorScales) -> Result<f64> {
        norm_with(f, self.norm, scales)
    }

    fn weight(&self, t: f64, m: impl Fn(f64) -> f64) -> f64 {
        let e = self.exponent - self.base;
        if e == 0.0 {
            1.0
        } else {
            m(t).powf(e)
        }
    }
}

fn fmt_exp(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// The weighted norms used to measure convergence.
///
/// With intermediates present these are the nine `X^{α_i}, Y^{β_i}, Z^{γ_i}`;
/// with base exponents only, `X^{α₀}, Y^{β₀}, Z^{γ₀}`; without a config, `L²`.
pub fn weighted_norms(cfg: Option<&ExponentConfig>) -> Vec<WeightedNorm> {
    let Some(c) = cfg else {
        return [FieldTag::U, FieldTag::Omega, FieldTag::Theta]
            .into_iter()
            .map(|field| WeightedNorm {
                field,
                exponent: 0.0,
                base: 0.0,
                norm: NormRequest::Lp { s: 2.0 },
            })
            .collect();
    };
    let (alphas, betas, gammas) = match c.intermediates() {
        Some(m) => (m.alpha.to_vec(), m.beta.to_vec(), m.gamma.to_vec()),
        None => (vec![c.alpha0], vec![c.beta0], vec![c.gamma0]),
    };
    let mut out = Vec::new();
    for a in alphas {
        out.push(WeightedNorm {
            field: FieldTag::U,
            exponent: a,
            base: c.alpha0,
            norm: NormRequest::Xalpha { alpha: a, p: c.p },
        });
    }
    for b in betas {
        out.push(WeightedNorm {
            field: FieldTag::Omega,
            exponent: b,
            base: c.beta0,
            norm: NormRequest::Ybeta { beta: b, q: c.q },
        });
    }
    for g in gammas {
        out.push(WeightedNorm {
            field: FieldTag::Theta,
            exponent: g,
            base: c.gamma0,
            norm: NormRequest::Zgamma { gamma: g, r: c.r },
        });
    }
    out
}

fn pick<'a>(
    tag: FieldTag,
    u: &'a SpectralField,
    omega: &'a SpectralField,
    theta: &'a SpectralField,
) -> &'a SpectralField {
    match tag {
        FieldTag::U => u,
        FieldTag::Omega => omega,
        FieldTag::Theta => theta,
    }
}

/// `sup_j t_j^{e-e₀} ‖a(t_j) - b(t_j)‖` for each weighted norm.
pub fn weighted_distance(
    a: &TrajectoryState,
    b: &TrajectoryState,
    norms: &[WeightedNorm],
    scales: &OperatorScales,
    exec: Exec,
) -> Result<Vec<f64>> {
    if a.times != b.times {
        return Err(config("weighted distance: trajectories live on different time grids"));
    }
    let per_node: Vec<Result<Vec<f64>>> = exec.map_range(a.nodes(), |j| {
        let du = a.u[j].sub(&b.u[j])?;
        let dw = a.omega[j].sub(&b.omega[j])?;
        let dt = a.theta[j].sub(&b.theta[j])?;
        norms
            .iter()
            .map(|n| Ok(n.weight(a.times[j], |t| t) * n.eval(pick(n.field, &du, &dw, &dt), scales)?))
            .collect()
    });
    let mut sup = vec![0.0f64; norms.len()];
    for row in per_node {
        for (s, v) in sup.iter_mut().zip(row?) {
            *s = s.max(v);
        }
    }
    Ok(sup)
}

/// Outcome of [`picard_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PicardStatus {
    Converged,
    MaxIterations,
    /// Ratio at least one for three consecutive iterations.
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub m: usize,
    /// Max over all weighted norms of the sup-in-time difference to the previous iterate.
    pub difference: f64,
    pub ratio: Option<f64>,
    /// Per-norm differences, ordered as [`PicardReport::norm_tags`].
    pub per_norm: Vec<f64>,
    pub per_norm_ratio: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub status: PicardStatus,
    pub norm_tags: Vec<String>,
    pub iterations: Vec<IterationRecord>,
}

impl PicardReport {
    pub fn final_difference(&self) -> f64 {
        self.iterations.last().map(|r| r.difference).unwrap_or(0.0)
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.iterations.iter().filter_map(|r| r.ratio).collect()
    }
}

/// Iterates [`picard_step`] from the free evolution until the weighted difference
/// drops below `cfg.tol`. A diverging run returns its partial state with
/// [`PicardStatus::Diverged`].
pub fn picard_solve(
    u0: &SpectralField,
    omega0: &SpectralField,
    theta0: &SpectralField,
    cfg: &PicardConfig,
    model: &Model,
) -> Result<(TrajectoryState, PicardReport)> {
    model.validate()?;
    let traj = initial_trajectory(u0, omega0, theta0, cfg, model)?;
    iterate(traj, cfg, model)
}

fn iterate(mut traj: TrajectoryState, cfg: &PicardConfig, model: &Model) -> Result<(TrajectoryState, PicardReport)> {
    let norms = weighted_norms(cfg.weighted_exponents.as_ref());
    let scales = model.params.scales();
    let mut report = PicardReport {
        status: PicardStatus::MaxIterations,
        norm_tags: norms.iter().map(WeightedNorm::tag).collect(),
        iterations: Vec::new(),
    };
    let mut streak = 0;
    for _ in 0..cfg.m_max {
        let next = picard_step(&traj, cfg, model)?;
        let per_norm = weighted_distance(&next, &traj, &norms, &scales, cfg.exec)?;
        let difference = per_norm.iter().cloned().fold(0.0, f64::max);
        let prev = report.iterations.last();
        let ratio = prev.and_then(|p| (p.difference > 0.0).then(|| difference / p.difference));
        let per_norm_ratio = match prev {
            Some(p) => per_norm
                .iter()
                .zip(&p.per_norm)
                .map(|(d, q)| (*q > 0.0).then(|| d / q))
                .collect(),
            None => vec![None; per_norm.len()],
        };
        report.iterations.push(IterationRecord {
            m: next.m,
            difference,
            ratio,
            per_norm,
            per_norm_ratio,
        });
        traj = next;
        if !difference.is_finite() {
            report.status = PicardStatus::Diverged;
            break;
        }
        if difference < cfg.tol {
            report.status = PicardStatus::Converged;
            break;
        }
        streak = if ratio.is_some_and(|r| r >= 1.0) { streak + 1 } else { 0 };
        if streak >= 3 {
            report.status = PicardStatus::Diverged;
            break;
        }
    }
    Ok((traj, report))
}

/// Sampled bound functions `K_{1,α_i}, K_{2,β_i}, K_{3,γ_i}` on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KValues {
    pub k1: [Vec<f64>; 3],
    pub k2: [Vec<f64>; 3],
    pub k3: [Vec<f64>; 3],
}

impl KValues {
    fn zeros(n: usize) -> Self {
        let z = || [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        KValues {
            k1: z(),
            k2: z(),
            k3: z(),
        }
    }

    fn all(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.k1.iter().chain(&self.k2).chain(&self.k3)
    }

    /// `K(t_j)`: max over all nine functions.
    pub fn envelope(&self) -> Vec<f64> {
        let n = self.k1[0].len();
        (0..n).map(|j| self.all().map(|v| v[j]).fold(0.0, f64::max)).collect()
    }

    /// `max_j max_i |self - other|`.
    pub fn sup_difference(&self, other: &KValues) -> f64 {
        self.all()
            .zip(other.all())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.all().all(|v| v.iter().all(|x| *x == 0.0))
    }

    fn scaled(&self, s: f64) -> Self {
        let f = |a: &[Vec<f64>; 3]| a.clone().map(|v| v.into_iter().map(|x| x * s).collect());
        KValues {
            k1: f(&self.k1),
            k2: f(&self.k2),
            k3: f(&self.k3),
        }
    }
}

/// `K⁰` on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K0Samples {
    pub times: Vec<f64>,
    pub values: KValues,
}

impl K0Samples {
    /// The same samples multiplied by `s` (initial data scaled by `s`).
    pub fn scaled(&self, s: f64) -> Self {
        K0Samples {
            times: self.times.clone(),
            values: self.values.scaled(s),
        }
    }
}

fn intermediates_of(cfg: &ExponentConfig) -> Result<Intermediates> {
    cfg.intermediates()
        .ok_or_else(|| config("exponents: the bound recursion needs all intermediate exponents"))
}

/// Running suprema `sup_{s≤t} s^{e-e₀} ‖f(s)‖` of every weighted norm along a trajectory.
fn running_sup(traj: &TrajectoryState, cfg: &ExponentConfig, scales: &OperatorScales, exec: Exec) -> Result<KValues> {
    let norms = weighted_norms(Some(cfg));
    let rows: Vec<Result<Vec<f64>>> = exec.map_range(traj.nodes(), |j| {
        let (u, w, th) = traj.state(j);
        norms
            .iter()
            .map(|n| Ok(n.weight(traj.times[j], |t| t) * n.eval(pick(n.field, u, w, th), scales)?))
            .collect()
    });
    let mut out = KValues::zeros(traj.nodes());
    let mut run = [0.0f64; 9];
    for (j, row) in rows.into_iter().enumerate() {
        let row = row?;
        for i in 0..9 {
            run[i] = run[i].max(row[i]);
        }
        for i in 0..3 {
            out.k1[i][j] = run[i];
            out.k2[i][j] = run[3 + i];
            out.k3[i][j] = run[6 + i];
        }
    }
    Ok(out)
}

/// `K⁰_{1,α}(t) = sup_{s≤t} s^{α-α₀}‖e^{-sA}u₀‖_{X^α}` and analogues, on the grid of `traj`.
pub fn k0_samples(traj: &TrajectoryState, cfg: &ExponentConfig, model: &Model, exec: Exec) -> Result<K0Samples> {
    intermediates_of(cfg)?;
    let (u0, w0, t0) = traj.state(0);
    let free = free_evolution(u0, w0, t0, &traj.times, model, exec)?;
    let mut u = Vec::new();
    let mut w = Vec::new();
    let mut th = Vec::new();
    for (a, b, c) in free {
        u.push(a);
        w.push(b);
        th.push(c);
    }
    let zero_rhs = Rhs {
        f: SpectralField::vector_zeros(traj.grid()),
        g: SpectralField::vector_zeros(traj.grid()),
        h: SpectralField::scalar_zeros(traj.grid()),
    };
    let free = TrajectoryState {
        times: traj.times.clone(),
        u,
        omega: w,
        theta: th,
        rhs: vec![zero_rhs; traj.nodes()],
        m: 0,
    };
    Ok(K0Samples {
        times: traj.times.clone(),
        values: running_sup(&free, cfg, &model.params.scales(), exec)?,
    })
}

/// Fitted constants `C₁ … C₉` of the nonlinear estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConstants {
    pub c: [f64; 9],
}

impl LemmaConstants {
    pub fn uniform(c: f64) -> Self {
        LemmaConstants { c: [c; 9] }
    }

    pub fn inflated(&self, factor: f64) -> Self {
        LemmaConstants {
            c: self.c.map(|x| x * factor),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.c.iter().enumerate() {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(config(format!("constants.c{} is missing or invalid: {c}", i + 1)));
            }
        }
        Ok(())
    }
}

/// Coefficients and `t`-powers of every term in the recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionCoefficients {
    /// Velocity terms per target `α_i`: `[K_{1,α₁}², K_{2,β₁}, K_{3,γ₁}]`.
    pub k1: [[f64; 3]; 3],
    pub k1_powers: [f64; 3],
    /// Microrotation terms per target `β_i`: `[K_{1,α₂}K_{2,β₂}, K_{2,β₂}, K_{1,α₂}, K_{3,γ₂}]`.
    pub k2: [[f64; 4]; 3],
    pub k2_powers: [f64; 4],
    /// Temperature terms per target `γ_i`: `[K_{1,α₃}K_{3,γ₃}, K_{1,α₃}², K_{1,α₃}K_{2,β₃}, K_{2,β₃}²]`.
    pub k3: [[f64; 4]; 3],
    pub k3_powers: [f64; 4],
}

impl RecursionCoefficients {
    /// Largest coefficient, at least one.
    pub fn effective_constant(&self) -> f64 {
        self.k1
            .iter()
            .flatten()
            .chain(self.k2.iter().flatten())
            .chain(self.k3.iter().flatten())
            .cloned()
            .fold(1.0, f64::max)
    }
}

/// Inputs to the recursion beyond the exponents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecursionInputs<'a> {
    pub cfg: &'a ExponentConfig,
    pub params: &'a CouplingParams,
    pub constants: &'a LemmaConstants,
    pub grid: GridSpec,
    pub lf: f64,
    pub lg: f64,
}

pub fn recursion_coefficients(inp: &RecursionInputs) -> Result<RecursionCoefficients> {
    inp.constants.validate()?;
    let c = inp.cfg;
    let m = intermediates_of(c)?;
    let [d1, d2, d3] = m.delta;
    let [a1, a2, a3] = m.alpha;
    let [b1, b2, b3] = m.beta;
    let [g1, g2, g3] = m.gamma;
    let (a0, b0, g0) = (c.alpha0, c.beta0, c.gamma0);
    let mr = inp.params.mu_r;
    let k = inp.constants.c;
    let lambda = c.lambda.unwrap_or(0.0);
    let scales = inp.params.scales();
    let mu_a = scales.min_eigenvalue(OperatorKind::StokesA, &inp.grid);
    let mu_g = scales.min_eigenvalue(OperatorKind::EllipticGamma, &inp.grid);
    let mu_b = scales.min_eigenvalue(OperatorKind::LaplaceB, &inp.grid);
    let ca = |x: f64| semigroup_constant(x, mu_a, lambda);
    let cg = |x: f64| semigroup_constant(x, mu_g, lambda);
    let cb = |x: f64| semigroup_constant(x, mu_b, lambda);
    let bf = beta_function;

    let mut k1 = [[0.0; 3]; 3];
    for (i, &al) in m.alpha.iter().enumerate() {
        k1[i] = [
            ca(al + d1)? * k[0] * bf(1.0 - (al + d1), 1.0 + 2.0 * (a0 - a1))?,
            2.0 * ca(al + d1)? * k[4] * mr * bf(1.0 - (al + d1), 1.0 + b0 - b1)?,
            ca(al)? * k[7] * inp.lf * bf(1.0 - al, 1.0 + g0 - g1)?,
        ];
    }
    let mut k2 = [[0.0; 4]; 3];
    for (i, &be) in m.beta.iter().enumerate() {
        k2[i] = [
            cg(be + d2)? * k[1] * bf(1.0 - (be + d2), 1.0 + a0 + b0 - a2 - b2)?,
            4.0 * cg(be)? * k[5] * mr * bf(1.0 - be, 1.0 + b0 - b2)?,
            2.0 * cg(be + d2)? * k[6] * mr * bf(1.0 - (be + d2), 1.0 + a0 - a2)?,
            cg(be)? * k[8] * inp.lg * bf(1.0 - be, 1.0 + g0 - g2)?,
        ];
    }
    let mut k3 = [[0.0; 4]; 3];
    for (i, &ga) in m.gamma.iter().enumerate() {
        let heat = cb(ga)? * k[3] * (1.0 + mr);
        k3[i] = [
            cb(ga + d3)? * k[2] * bf(1.0 - (ga + d3), 1.0 + a0 + g0 - a3 - g3)?,
            heat * bf(1.0 - ga, 1.0 + 2.0 * (a0 - a3))?,
            2.0 * heat * bf(1.0 - ga, 1.0 + a0 + b0 - a3 - b3)?,
            heat * bf(1.0 - ga, 1.0 + 2.0 * (b0 - b3))?,
        ];
    }
    Ok(RecursionCoefficients {
        k1,
        k1_powers: [1.0 + a0 - 2.0 * a1 - d1, 1.0 + b0 - a0 - b1 - d1, 1.0 + g0 - a0 - g1],
        k2,
        k2_powers: [1.0 + a0 - a2 - b2 - d2, 1.0 - b2, 1.0 + a0 - b0 - a2 - d2, 1.0 + g0 - b0 - g2],
        k3,
        k3_powers: [
            1.0 + a0 - a3 - g3 - d3,
            1.0 + 2.0 * a0 - g0 - 2.0 * a3,
            1.0 + a0 + b0 - g0 - a3 - b3,
            1.0 + 2.0 * b0 - g0 - 2.0 * b3,
        ],
    })
}

fn tpow(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        t.powf(e)
    }
}

/// One application of the recursion: `K^{m+1} = K⁰ + (terms in K^m)`.
pub fn km_step(k0: &K0Samples, km: &KValues, co: &RecursionCoefficients) -> KValues {
    let n = k0.times.len();
    let mut out = k0.values.clone();
    for j in 0..n {
        let t = k0.times[j];
        let (ka, kb, kg) = (
            [km.k1[0][j], km.k1[1][j], km.k1[2][j]],
            [km.k2[0][j], km.k2[1][j], km.k2[2][j]],
            [km.k3[0][j], km.k3[1][j], km.k3[2][j]],
        );
        let p1 = co.k1_powers.map(|e| tpow(t, e));
        let p2 = co.k2_powers.map(|e| tpow(t, e));
        let p3 = co.k3_powers.map(|e| tpow(t, e));
        for i in 0..3 {
            out.k1[i][j] += co.k1[i][0] * ka[0] * ka[0] * p1[0] + co.k1[i][1] * kb[0] * p1[1] + co.k1[i][2] * kg[0] * p1[2];
            out.k2[i][j] += co.k2[i][0] * ka[1] * kb[1] * p2[0]
                + co.k2[i][1] * kb[1] * p2[1]
                + co.k2[i][2] * ka[1] * p2[2]
                + co.k2[i][3] * kg[1] * p2[3];
            out.k3[i][j] += co.k3[i][0] * ka[2] * kg[2] * p3[0]
                + co.k3[i][1] * ka[2] * ka[2] * p3[1]
                + co.k3[i][2] * ka[2] * kb[2] * p3[2]
                + co.k3[i][3] * kb[2] * kb[2] * p3[3];
        }
    }
    out
}

/// History of the bound recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmTracker {
    pub times: Vec<f64>,
    pub coefficients: RecursionCoefficients,
    /// `K^0, K^1, …`.
    pub history: Vec<KValues>,
    /// Successive sup-differences `‖K^{m+1} - K^m‖_∞`.
    pub differences: Vec<f64>,
    /// True when the differences fell below the stopping threshold.
    pub converged: bool,
}

impl KmTracker {
    pub fn current(&self) -> &KValues {
        self.history.last().expect("K⁰ is always present")
    }

    /// True when `K^m ≤ K^{m+1}` at every sample.
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| {
            w[0].all()
                .zip(w[1].all())
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| *x <= *y * (1.0 + 1e-14) + 1e-300))
        })
    }
}

/// Sup-difference below which the recursion is considered converged.
pub const KM_TOL: f64 = 1e-10;

/// Iterates the bound recursion up to `iterations` times, stopping early once
/// successive iterates differ by less than [`KM_TOL`].
pub fn km_recursion(k0: &K0Samples, inp: &RecursionInputs, iterations: usize) -> Result<KmTracker> {
    let co = recursion_coefficients(inp)?;
    let mut tracker = KmTracker {
        times: k0.times.clone(),
        coefficients: co,
        history: vec![k0.values.clone()],
        differences: Vec::new(),
        converged: false,
    };
    for _ in 0..iterations {
        let next = km_step(k0, tracker.current(), &tracker.coefficients);
        let d = next.sup_difference(tracker.current());
        tracker.history.push(next);
        tracker.differences.push(d);
        if d < KM_TOL {
            tracker.converged = true;
            break;
        }
        if !d.is_finite() {
            break;
        }
    }
    Ok(tracker)
}

/// Result of comparing computed iterates with their bound curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub checked: usize,
    pub violations: usize,
    /// `max t^{e-e₀}‖f(t)‖ / K(t)` over samples with `K(t) > 0`.
    pub worst_ratio: f64,
}

/// Checks `t^{α-α₀}‖u^m(t)‖_{X^α} ≤ K^m_{1,α}(t)` and analogues at every node.
pub fn check_domination(
    bound: &KValues,
    iterate: &TrajectoryState,
    cfg: &ExponentConfig,
    model: &Model,
    exec: Exec,
) -> Result<DominationReport> {
    let actual = running_sup(iterate, cfg, &model.params.scales(), exec)?;
    if actual.k1[0].len() != bound.k1[0].len() {
        return Err(config("domination check: bound and iterate sampled on different grids"));
    }
    let mut rep = DominationReport {
        checked: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for (a, b) in actual.all().zip(bound.all()) {
        for (x, y) in a.iter().zip(b) {
            rep.checked += 1;
            if *x > *y * (1.0 + 1e-12) + 1e-300 {
                rep.violations += 1;
            }
            if *y > 0.0 {
                rep.worst_ratio = rep.worst_ratio.max(x / y);
            }
        }
    }
    Ok(rep)
}

/// Spectral radius of a real 3×3 matrix from its characteristic cubic.
pub fn spectral_radius3(m: &[[f64; 3]; 3]) -> f64 {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    cubic_roots(-tr, minors, -det).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Roots of `x³ + a x² + b x + c` by Cardano's formula.
pub fn cubic_roots(a: f64, b: f64, c: f64) -> [Complex64; 3] {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = Complex64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let half = Complex64::new(-q / 2.0, 0.0);
    let cand = if (half + disc).norm() >= (half - disc).norm() { half + disc } else { half - disc };
    let w = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = [Complex64::new(0.0, 0.0); 3];
    if cand.norm() == 0.0 {
        return out.map(|_| Complex64::new(-shift, 0.0));
    }
    let u = cand.cbrt();
    let mut uk = u;
    for r in out.iter_mut() {
        *r = uk - p / (3.0 * uk) - shift;
        uk *= w;
    }
    out
}

/// Per-sample factors of the horizon conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonSample {
    pub t: f64,
    pub k0: f64,
    /// `C(K⁰ + t^a)`.
    pub factor_a: f64,
    /// `C(K⁰ + t^b)`.
    pub factor_b: f64,
    /// `C K⁰`.
    pub factor_0: f64,
    /// `ρ(C K(t))`, only in equality branches.
    pub spectral_radius: Option<f64>,
}

impl HorizonSample {
    fn admissible(&self) -> bool {
        self.factor_a < 1.0 && self.factor_b < 1.0 && self.factor_0 < 1.0 && self.spectral_radius.map_or(true, |r| r < 1.0)
    }
}

/// Horizon on which the contraction conditions hold with the fitted constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    /// Largest sampled `T*` with every condition satisfied on `(0, T*]`.
    pub t_star: f64,
    /// The same with every constant inflated by 10%.
    pub t_star_inflated: f64,
    pub effective_constant: f64,
    pub exponent_a: f64,
    pub exponent_b: f64,
    pub equality_branch: bool,
    pub samples: Vec<HorizonSample>,
}

fn horizon_samples(k0: &K0Samples, inp: &RecursionInputs, c: f64) -> Result<(Vec<HorizonSample>, f64, f64)> {
    let cfg = inp.cfg;
    let m = intermediates_of(cfg)?;
    let (a0, b0, g0) = (cfg.alpha0, cfg.beta0, cfg.gamma0);
    let a = (1.0 + b0 - a0 - m.beta[0] - m.delta[0]).min(1.0 + g0 - a0 - m.gamma[0]);
    let b = (1.0 + a0 - b0 - m.alpha[1] - m.delta[1])
        .min(1.0 - m.beta[1])
        .min(1.0 + g0 - b0 - m.gamma[1]);
    let e21 = 1.0 + a0 - b0 - m.alpha[1] - m.delta[1];
    let e22 = 1.0 - m.beta[1];
    let equality = Branches::of(cfg).any();
    let env = k0.values.envelope();
    let samples = k0
        .times
        .iter()
        .zip(&env)
        .map(|(&t, &k)| {
            let rho = equality.then(|| {
                let mat = [
                    [c * k, c, c],
                    [c * (k + tpow(t, e21)), c * (k + tpow(t, e22)), c],
                    [c * k, c * k, c * k],
                ];
                spectral_radius3(&mat)
            });
            HorizonSample {
                t,
                k0: k,
                factor_a: c * (k + tpow(t, a)),
                factor_b: c * (k + tpow(t, b)),
                factor_0: c * k,
                spectral_radius: rho,
            }
        })
        .collect();
    Ok((samples, a, b))
}

fn admissible_horizon(samples: &[HorizonSample], t_full: f64, zero: bool) -> Option<f64> {
    if zero {
        return Some(t_full);
    }
    let mut best = None;
    for s in samples.iter().filter(|s| s.t > 0.0) {
        if !s.admissible() {
            break;
        }
        best = Some(s.t);
    }
    best
}

/// Local existence horizon from the contraction conditions, using fitted constants.
pub fn local_horizon(k0: &K0Samples, inp: &RecursionInputs) -> Result<HorizonReport> {
    let co = recursion_coefficients(inp)?;
    let c = co.effective_constant();
    let (samples, a, b) = horizon_samples(k0, inp, c)?;
    let t_full = *k0.times.last().ok_or_else(|| config("horizon: empty time grid"))?;
    let zero = k0.values.is_zero();
    let t_star = admissible_horizon(&samples, t_full, zero).ok_or_else(|| {
        domain(format!(
            "degenerate horizon: contraction conditions fail at the first sample t = {:.3e} (C = {c:.3e})",
            samples.iter().find(|s| s.t > 0.0).map(|s| s.t).unwrap_or(0.0)
        ))
    })?;
    let inflated = LemmaConstants::inflated(inp.constants, 1.1);
    let inp2 = RecursionInputs {
        constants: &inflated,
        ..*inp
    };
    let c2 = recursion_coefficients(&inp2)?.effective_constant();
    let (s2, _, _) = horizon_samples(k0, &inp2, c2)?;
    let t_star_inflated = admissible_horizon(&s2, t_full, zero).unwrap_or(0.0);
    Ok(HorizonReport {
        t_star,
        t_star_inflated,
        effective_constant: c,
        exponent_a: a,
        exponent_b: b,
        equality_branch: Branches::of(inp.cfg).any(),
        samples,
    })
}

/// Windowed continuation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    pub t_total: f64,
    pub window: f64,
    /// The constant `C` of the small-data bound `E ≤ C(D₀ + E²)`.
    #[serde(default = "default_bound_constant")]
    pub bound_constant: f64,
}

fn default_bound_constant() -> f64 {
    1.0
}

impl GlobalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(config(format!("global.t_total must be positive, got {}", self.t_total)));
        }
        if !(self.window > 0.0 && self.window <= self.t_total) {
            return Err(config(format!("global.window must lie in (0, t_total], got {}", self.window)));
        }
        if !(self.bound_constant > 0.0 && self.bound_constant.is_finite()) {
            return Err(config("global.bound_constant must be positive"));
        }
        Ok(())
    }
}

/// `E_{1,α}, E_{2,β}, E_{3,γ}` at one node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ESample {
    pub t: f64,
    /// Running suprema, ordered as [`GlobalRun::norm_tags`].
    pub values: Vec<f64>,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalRun {
    #[serde(skip)]
    pub trajectory: Option<TrajectoryState>,
    pub norm_tags: Vec<String>,
    pub elog: Vec<ESample>,
    pub windows: Vec<PicardReport>,
    /// `D₀ = ‖u₀‖_{X^{α₀}} + ‖ω₀‖_{Y^{β₀}} + ‖θ₀‖_{Z^{γ₀}}`.
    pub d0: f64,
    /// `4C²D₀ ≥ 1`: the small-data hypothesis fails.
    pub large_data: bool,
    /// Some `E(t) > 2C D₀`.
    pub bound_exceeded: bool,
    pub aborted: bool,
}

/// Marches [`picard_solve`] over consecutive windows, restarting each from the
/// previous endpoint, and logs the E-functions with `m(t) = min{t, 1}`.
pub fn global_solve(
    u0: &SpectralField,
    omega0: &SpectralField,
    theta0: &SpectralField,
    exps: &ExponentConfig,
    picard: &PicardConfig,
    model: &Model,
    gcfg: &GlobalConfig,
) -> Result<GlobalRun> {
    check_initial(u0, omega0, theta0)?;
    continue_global(None, (u0, omega0, theta0), exps, picard, model, gcfg)
}

/// Resumes a global run from a stored trajectory prefix (for example a checkpoint).
pub fn global_resume(
    prefix: &TrajectoryState,
    exps: &ExponentConfig,
    picard: &PicardConfig,
    model: &Model,
    gcfg: &GlobalConfig,
) -> Result<GlobalRun> {
    let (u, w, t) = prefix.last();
    continue_global(Some(prefix), (u, w, t), exps, picard, model, gcfg)
}

fn continue_global(
    prefix: Option<&TrajectoryState>,
    start: (&SpectralField, &SpectralField, &SpectralField),
    exps: &ExponentConfig,
    picard: &PicardConfig,
    model: &Model,
    gcfg: &GlobalConfig,
) -> Result<GlobalRun> {
    gcfg.validate()?;
    model.validate()?;
    picard.validate()?;
    exps.validate_fields()?;
    let (lambda, lambda2) = match (exps.lambda, exps.lambda2) {
        (Some(l), Some(l2)) => (l, l2),
        _ => return Err(config("exponents.lambda and exponents.lambda2 are required for a global run")),
    };
    let mut win_cfg = picard.clone();
    win_cfg.t_final = gcfg.window;
    let mut times = prefix.map(|p| p.times.clone()).unwrap_or_else(|| vec![0.0]);
    let (mut us, mut ws, mut ths) = match prefix {
        Some(p) => (p.u.clone(), p.omega.clone(), p.theta.clone()),
        None => (vec![start.0.clone()], vec![start.1.clone()], vec![start.2.clone()]),
    };
    let mut rhs = prefix.map(|p| p.rhs.clone()).unwrap_or_default();
    let mut m_max = prefix.map(|p| p.m).unwrap_or(0);
    let mut t0 = *times.last().expect("nonempty");
    let mut windows = Vec::new();
    let mut aborted = false;
    let mut cur = (start.0.clone(), start.1.clone(), start.2.clone());
    let total = gcfg.t_total;
    while t0 < total * (1.0 - 1e-12) {
        let len = (total - t0).min(gcfg.window);
        win_cfg.t_final = len;
        let traj = initial_trajectory(&cur.0, &cur.1, &cur.2, &win_cfg, model)?;
        let (traj, rep) = iterate(traj, &win_cfg, model)?;
        let status = rep.status;
        windows.push(rep);
        if rhs.is_empty() {
            rhs.push(traj.rhs[0].clone());
        }
        for j in 1..traj.nodes() {
            times.push(t0 + traj.times[j]);
            us.push(traj.u[j].clone());
            ws.push(traj.omega[j].clone());
            ths.push(traj.theta[j].clone());
            rhs.push(traj.rhs[j].clone());
        }
        m_max = m_max.max(traj.m);
        let (a, b, c) = traj.last();
        cur = (a.clone(), b.clone(), c.clone());
        t0 += len;
        if status == PicardStatus::Diverged {
            aborted = true;
            break;
        }
    }
    let trajectory = TrajectoryState {
        times,
        u: us,
        omega: ws,
        theta: ths,
        rhs,
        m: m_max,
    };
    let norms = weighted_norms(Some(exps));
    let scales = model.params.scales();
    let rows: Vec<Result<Vec<f64>>> = picard.exec.map_range(trajectory.nodes(), |j| {
        let t = trajectory.times[j];
        let (u, w, th) = trajectory.state(j);
        norms
            .iter()
            .map(|n| {
                let rate = if n.field == FieldTag::Theta { lambda2 } else { lambda };
                let weight = if t == 0.0 { n.weight(0.0, |s| s) } else { n.weight(t, |s| s.min(1.0)) };
                Ok(weight * (rate * t).exp() * n.eval(pick(n.field, u, w, th), &scales)?)
            })
            .collect()
    });
    let mut run = vec![0.0f64; norms.len()];
    let mut elog = Vec::with_capacity(rows.len());
    for (j, row) in rows.into_iter().enumerate() {
        for (r, v) in run.iter_mut().zip(row?) {
            *r = r.max(v);
        }
        elog.push(ESample {
            t: trajectory.times[j],
            values: run.clone(),
            max: run.iter().cloned().fold(0.0, f64::max),
        });
    }
    let (u0, w0, th0) = trajectory.state(0);
    let d0 = initial_size(u0, w0, th0, exps, &scales)?;
    let c = gcfg.bound_constant;
    let bound_exceeded = elog.iter().any(|e| e.max > 2.0 * c * d0 * (1.0 + 1e-12));
    Ok(GlobalRun {
        trajectory: Some(trajectory),
        norm_tags: norms.iter().map(WeightedNorm::tag).collect(),
        elog,
        windows,
        d0,
        large_data: 4.0 * c * c * d0 >= 1.0,
        bound_exceeded,
        aborted,
    })
}

/// `‖u₀‖_{X^{α₀}_p} + ‖ω₀‖_{Y^{β₀}_q} + ‖θ₀‖_{Z^{γ₀}_r}`.
pub fn initial_size(
    u0: &SpectralField,
    omega0: &SpectralField,
    theta0: &SpectralField,
    exps: &ExponentConfig,
    scales: &OperatorScales,
) -> Result<f64> {
    Ok(norm_with(u0, NormRequest::Xalpha { alpha: exps.alpha0, p: exps.p }, scales)?
        + norm_with(omega0, NormRequest::Ybeta { beta: exps.beta0, q: exps.q }, scales)?
        + norm_with(theta0, NormRequest::Zgamma { gamma: exps.gamma0, r: exps.r }, scales)?)
}
