//! Admissibility of the integrability and fractional-power exponents, and
//! automatic choice of the intermediate exponents used by the weighted norms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Tolerance for non-strict inequalities and for detecting equality branches.
pub const TOL: f64 = 1e-12;

/// Lattice resolutions tried by [`select_intermediate`], coarsest first.
pub const RESOLUTIONS: [u32; 4] = [32, 64, 128, 256];

/// All scalar exponents. Intermediate exponents and rates are optional so that
/// a base-only configuration can be completed by [`select_intermediate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
}

/// The nine intermediate exponents and three shifts, all present.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intermediates {
    pub delta: [f64; 3],
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub gamma: [f64; 3],
}

impl ExponentConfig {
    pub fn base(p: f64, q: f64, r: f64, alpha0: f64, beta0: f64, gamma0: f64) -> Self {
        ExponentConfig {
            p,
            q,
            r,
            alpha0,
            beta0,
            gamma0,
            ..Default::default()
        }
    }

    pub fn with_rates(mut self, lambda: f64, lambda1: f64, lambda2: f64) -> Self {
        self.lambda = Some(lambda);
        self.lambda1 = Some(lambda1);
        self.lambda2 = Some(lambda2);
        self
    }

    pub fn with_intermediates(mut self, m: &Intermediates) -> Self {
        [self.delta1, self.delta2, self.delta3] = m.delta.map(Some);
        [self.alpha1, self.alpha2, self.alpha3] = m.alpha.map(Some);
        [self.beta1, self.beta2, self.beta3] = m.beta.map(Some);
        [self.gamma1, self.gamma2, self.gamma3] = m.gamma.map(Some);
        self
    }

    /// Base exponents only.
    pub fn base_only(&self) -> Self {
        let mut b = Self::base(self.p, self.q, self.r, self.alpha0, self.beta0, self.gamma0);
        b.lambda = self.lambda;
        b.lambda1 = self.lambda1;
        b.lambda2 = self.lambda2;
        b
    }

    /// The intermediates, if every one of them is set.
    pub fn intermediates(&self) -> Option<Intermediates> {
        Some(Intermediates {
            delta: [self.delta1?, self.delta2?, self.delta3?],
            alpha: [self.alpha1?, self.alpha2?, self.alpha3?],
            beta: [self.beta1?, self.beta2?, self.beta3?],
            gamma: [self.gamma1?, self.gamma2?, self.gamma3?],
        })
    }

    fn any_intermediate(&self) -> bool {
        [
            self.delta1,
            self.delta2,
            self.delta3,
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.beta1,
            self.beta2,
            self.beta3,
            self.gamma1,
            self.gamma2,
            self.gamma3,
        ]
        .iter()
        .any(Option::is_some)
    }

    /// Rejects NaN/infinite values and partially specified intermediates.
    pub fn validate_fields(&self) -> Result<()> {
        let named = [
            ("p", Some(self.p)),
            ("q", Some(self.q)),
            ("r", Some(self.r)),
            ("alpha0", Some(self.alpha0)),
            ("beta0", Some(self.beta0)),
            ("gamma0", Some(self.gamma0)),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("delta3", self.delta3),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("lambda", self.lambda),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ];
        for (name, v) in named {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(config(format!("exponents.{name} must be finite, got {v}")));
                }
            }
        }
        if self.any_intermediate() && self.intermediates().is_none() {
            return Err(config(
                "exponents: intermediate exponents must be given all together or not at all",
            ));
        }
        let rates = [self.lambda, self.lambda1, self.lambda2];
        if rates.iter().any(Option::is_some) && !rates.iter().all(Option::is_some) {
            return Err(config("exponents: lambda, lambda1, lambda2 must be given together"));
        }
        Ok(())
    }
}

/// Relation between the two sides of an inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        })
    }
}

/// One evaluated inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    fn new(id: impl Into<String>, lhs: f64, relation: Relation, rhs: f64) -> Self {
        Constraint {
            id: id.into(),
            lhs,
            relation,
            rhs,
        }
    }

    /// Signed slack: positive means room to spare.
    pub fn margin(&self) -> f64 {
        match self.relation {
            Relation::Lt | Relation::Le => self.rhs - self.lhs,
            Relation::Gt | Relation::Ge => self.lhs - self.rhs,
            Relation::Eq => -(self.lhs - self.rhs).abs(),
        }
    }

    pub fn satisfied(&self) -> bool {
        self.satisfied_with_margin(0.0)
    }

    /// Satisfied even after demanding `extra` additional slack.
    pub fn satisfied_with_margin(&self, extra: f64) -> bool {
        let m = self.margin() - extra;
        if m.is_nan() {
            return false;
        }
        match self.relation {
            Relation::Lt | Relation::Gt => m > TOL,
            Relation::Le | Relation::Ge => m >= -TOL,
            Relation::Eq => m >= -TOL,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} {} {}", self.id, self.lhs, self.relation, self.rhs)
    }
}

/// Which group of conditions to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckLevel {
    /// Local/global existence conditions, plus (when intermediates are set)
    /// the estimate hypotheses, boxes and coupling conditions.
    Base,
    /// Conditions for time-derivative regularity.
    Regularity,
    /// Conditions allowing zero base exponents with `q = p`.
    Classical,
}

/// Outcome of [`check_config`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub level: CheckLevel,
    pub passed: bool,
    pub checked: Vec<Constraint>,
    pub violations: Vec<Constraint>,
}

impl Verdict {
    fn from(level: CheckLevel, checked: Vec<Constraint>) -> Self {
        let violations: Vec<_> = checked.iter().filter(|c| !c.satisfied()).cloned().collect();
        Verdict {
            level,
            passed: violations.is_empty(),
            checked,
            violations,
        }
    }
}

use Relation::*;

fn k(id: &str, lhs: f64, rel: Relation, rhs: f64) -> Constraint {
    Constraint::new(id, lhs, rel, rhs)
}

fn sobolev_gap(a: f64, b: f64) -> f64 {
    1.5 * (a - b)
}

/// Integrability and base-exponent conditions for mild solutions.
pub fn base_constraints(c: &ExponentConfig) -> Vec<Constraint> {
    let (ip, iq, ir) = (1.0 / c.p, 1.0 / c.q, 1.0 / c.r);
    let (a0, b0, g0) = (c.alpha0, c.beta0, c.gamma0);
    vec![
        k("p > 1", c.p, Gt, 1.0),
        k("q > 1", c.q, Gt, 1.0),
        k("r > 1", c.r, Gt, 1.0),
        k("|1/p - 1/q| < 1/3", (ip - iq).abs(), Lt, 1.0 / 3.0),
        k("1/p - 1/(2r) < 1/3", ip - 0.5 * ir, Lt, 1.0 / 3.0),
        k("1/r - 1/p < 2/3", ir - ip, Lt, 2.0 / 3.0),
        k("1/q - 1/(2r) < 1/3", iq - 0.5 * ir, Lt, 1.0 / 3.0),
        k("1/r - 1/q < 2/3", ir - iq, Lt, 2.0 / 3.0),
        k("alpha0 >= max{0, 3/(2p) - 1/2}", a0, Ge, (1.5 * ip - 0.5).max(0.0)),
        k("alpha0 < 1", a0, Lt, 1.0),
        k("beta0 >= 0", b0, Ge, 0.0),
        k("beta0 < 1", b0, Lt, 1.0),
        k("gamma0 >= 0", g0, Ge, 0.0),
        k("gamma0 < 1", g0, Lt, 1.0),
        k("alpha0 - beta0 - 3/2(1/p - 1/q) <= 1/2", a0 - b0 - sobolev_gap(ip, iq), Le, 0.5),
        k(
            "alpha0 - gamma0/2 - 3/2(1/p - 1/(2r)) >= 0",
            a0 - 0.5 * g0 - sobolev_gap(ip, 0.5 * ir),
            Ge,
            0.0,
        ),
        k("alpha0 - gamma0 - 3/2(1/p - 1/r) > -1", a0 - g0 - sobolev_gap(ip, ir), Gt, -1.0),
        k("alpha0 - gamma0 - 3/2(1/p - 1/r) <= 1", a0 - g0 - sobolev_gap(ip, ir), Le, 1.0),
        k(
            "beta0 - gamma0/2 - 3/2(1/q - 1/(2r)) >= 0",
            b0 - 0.5 * g0 - sobolev_gap(iq, 0.5 * ir),
            Ge,
            0.0,
        ),
        k("beta0 - gamma0 - 3/2(1/q - 1/r) > -1", b0 - g0 - sobolev_gap(iq, ir), Gt, -1.0),
        k("beta0 - gamma0 - 3/2(1/q - 1/r) <= 1", b0 - g0 - sobolev_gap(iq, ir), Le, 1.0),
    ]
}

/// Conditions for regularity of the time derivatives.
pub fn regularity_constraints(c: &ExponentConfig) -> Vec<Constraint> {
    let (ip, iq, ir) = (1.0 / c.p, 1.0 / c.q, 1.0 / c.r);
    let (a0, b0, g0) = (c.alpha0, c.beta0, c.gamma0);
    let s = 1.5 * ip - 0.5;
    let mix = 1.5 * (ip + iq - ir);
    vec![
        k("alpha0 >= 3(1/p - 1/(2r))", a0, Ge, 3.0 * (ip - 0.5 * ir)),
        k("beta0 >= max{3/(2p) - 1/2, 3(1/q - 1/(2r))}", b0, Ge, s.max(3.0 * (iq - 0.5 * ir))),
        k("gamma0 >= 3/(2p) - 1/2", g0, Ge, s),
        k("alpha0 >= 3/2(1/p + 1/q - 1/r)", a0, Ge, mix),
        k("beta0 >= 3/2(1/p + 1/q - 1/r)", b0, Ge, mix),
        k("alpha0 - gamma0 >= 3/2(1/p - 1/q) - 1/2", a0 - g0, Ge, sobolev_gap(ip, iq) - 0.5),
        k("beta0 - gamma0 >= 3/2(1/q - 1/p) - 1/2", b0 - g0, Ge, sobolev_gap(iq, ip) - 0.5),
        k("beta0 - alpha0 > -1/2", b0 - a0, Gt, -0.5),
        k("beta0 - gamma0 > -1/2", b0 - g0, Gt, -0.5),
        k(
            "2 alpha0 - beta0 >= max{3/(2p) - 1/2, 3(1/p - 1/(2r))}",
            2.0 * a0 - b0,
            Ge,
            s.max(3.0 * (ip - 0.5 * ir)),
        ),
        k("2 alpha0 - gamma0 >= 3/(2p) - 1/2", 2.0 * a0 - g0, Ge, s),
        k("2 beta0 - alpha0 >= 3(1/q - 1/(2r))", 2.0 * b0 - a0, Ge, 3.0 * (iq - 0.5 * ir)),
        k("alpha0 + beta0 - gamma0 >= 3/(2p) - 1/2", a0 + b0 - g0, Ge, s),
        k("alpha0 - beta0 + gamma0 >= 3/(2p) - 1/2", a0 - b0 + g0, Ge, s),
        k("alpha0 - gamma0 - 3/2(1/q - 1/r) > -1", a0 - g0 - sobolev_gap(iq, ir), Gt, -1.0),
        k("alpha0 - gamma0 - 3/2(1/q - 1/r) <= 1", a0 - g0 - sobolev_gap(iq, ir), Le, 1.0),
        k("beta0 - gamma0 - 3/2(1/p - 1/r) > -1", b0 - g0 - sobolev_gap(ip, ir), Gt, -1.0),
        k("beta0 - gamma0 - 3/2(1/p - 1/r) <= 1", b0 - g0 - sobolev_gap(ip, ir), Le, 1.0),
    ]
}

/// Conditions under which zero base exponents are admissible.
pub fn classical_constraints(c: &ExponentConfig) -> Vec<Constraint> {
    let (ip, ir) = (1.0 / c.p, 1.0 / c.r);
    vec![
        k("p > 3", c.p, Gt, 3.0),
        k("r > 3", c.r, Gt, 3.0),
        k("1/p - 1/(2r) <= 0", ip - 0.5 * ir, Le, 0.0),
        k("1/r - 1/p < 2/3", ir - ip, Lt, 2.0 / 3.0),
        k("q = p", c.q, Eq, c.p),
    ]
}

/// Which side of each boundary case the base exponents fall on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branches {
    /// `α₀ - β₀ - 3/2(1/p - 1/q) = 1/2`.
    pub beta1_equality: bool,
    /// `α₀ - γ₀ - 3/2(1/p - 1/r) = 1`.
    pub gamma1_equality: bool,
    /// `β₀ - γ₀ - 3/2(1/q - 1/r) = 1`.
    pub gamma2_equality: bool,
}

impl Branches {
    pub fn of(c: &ExponentConfig) -> Self {
        let (ip, iq, ir) = (1.0 / c.p, 1.0 / c.q, 1.0 / c.r);
        Branches {
            beta1_equality: (c.alpha0 - c.beta0 - sobolev_gap(ip, iq) - 0.5).abs() <= TOL,
            gamma1_equality: (c.alpha0 - c.gamma0 - sobolev_gap(ip, ir) - 1.0).abs() <= TOL,
            gamma2_equality: (c.beta0 - c.gamma0 - sobolev_gap(iq, ir) - 1.0).abs() <= TOL,
        }
    }

    pub fn any(&self) -> bool {
        self.beta1_equality || self.gamma1_equality || self.gamma2_equality
    }
}

/// Groups of intermediate exponents that are constrained jointly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Group {
    Delta,
    Alpha1,
    Beta1,
    Alpha2Beta2,
    Alpha3Gamma3,
    Beta3,
    Gamma1,
    Gamma2,
}

fn group_constraints(c: &ExponentConfig, m: &Intermediates, group: Group) -> Vec<Constraint> {
    let (ip, iq, ir) = (1.0 / c.p, 1.0 / c.q, 1.0 / c.r);
    let (a0, b0, g0) = (c.alpha0, c.beta0, c.gamma0);
    let [d1, d2, d3] = m.delta;
    let [a1, a2, a3] = m.alpha;
    let [b1, b2, b3] = m.beta;
    let [g1, g2, g3] = m.gamma;
    let dmax = |s: f64| 0.5 + 1.5 * (1.0 - s);
    let br = Branches::of(c);
    match group {
        Group::Delta => {
            let mut v = Vec::new();
            for (i, (d, base, s)) in [(d1, a0, ip), (d2, b0, iq), (d3, g0, ir)].into_iter().enumerate() {
                let n = i + 1;
                if base > 0.0 {
                    v.push(k(&format!("delta{n} = 0 when the base exponent is positive"), d, Eq, 0.0));
                } else {
                    v.push(k(&format!("delta{n} > 0 when the base exponent is zero"), d, Gt, 0.0));
                }
                v.push(k(&format!("delta{n} < 1/2 + 3/2(1 - 1/s)"), d, Lt, dmax(s)));
            }
            v
        }
        Group::Alpha1 => vec![
            k("alpha1 > alpha0", a1, Gt, a0),
            k("alpha1 < 1 - delta1", a1, Lt, 1.0 - d1),
            k("transport: alpha1 > 0", a1, Gt, 0.0),
            k("transport: alpha1 + delta1 > 1/2", a1 + d1, Gt, 0.5),
            k("transport: 2 alpha1 + delta1 >= 3/(2p) + 1/2", 2.0 * a1 + d1, Ge, 1.5 * ip + 0.5),
            k("coupling: 2 alpha1 + delta1 <= 1 + alpha0", 2.0 * a1 + d1, Le, 1.0 + a0),
        ],
        Group::Beta1 => {
            let mut v = vec![
                k("beta1 > beta0", b1, Gt, b0),
                k("beta1 < 1 - delta2", b1, Lt, 1.0 - d2),
                k("rot microrotation: beta1 >= 0", b1, Ge, 0.0),
                k("rot microrotation: beta1 > 3/2(1/q - 1/p)", b1, Gt, sobolev_gap(iq, ip)),
                k(
                    "rot microrotation: beta1 + delta1 >= 3/2(1/q - 1/p) + 1/2",
                    b1 + d1,
                    Ge,
                    sobolev_gap(iq, ip) + 0.5,
                ),
            ];
            if br.beta1_equality {
                v.push(k("branch: beta1 + delta1 = 1 - alpha0 + beta0", b1 + d1, Eq, 1.0 - a0 + b0));
            } else {
                v.push(k("branch: beta1 + delta1 < 1 - alpha0 + beta0", b1 + d1, Lt, 1.0 - a0 + b0));
            }
            v
        }
        Group::Alpha2Beta2 => vec![
            k("alpha2 > alpha0", a2, Gt, a0),
            k("alpha2 < 1 - delta1", a2, Lt, 1.0 - d1),
            k("beta2 > beta0", b2, Gt, b0),
            k("beta2 < 1 - delta2", b2, Lt, 1.0 - d2),
            k("microrotation transport: alpha2 >= 0", a2, Ge, 0.0),
            k("microrotation transport: beta2 >= 0", b2, Ge, 0.0),
            k("microrotation transport: alpha2 > 3/2(1/p - 1/q)", a2, Gt, sobolev_gap(ip, iq)),
            k("microrotation transport: beta2 + delta2 > 1/2", b2 + d2, Gt, 0.5),
            k(
                "microrotation transport: alpha2 + beta2 + delta2 >= 3/(2p) + 1/2",
                a2 + b2 + d2,
                Ge,
                1.5 * ip + 0.5,
            ),
            k("microrotation bound: beta2 <= 1", b2, Le, 1.0),
            k(
                "rot velocity: alpha2 + delta2 >= 3/2(1/p - 1/q) + 1/2",
                a2 + d2,
                Ge,
                sobolev_gap(ip, iq) + 0.5,
            ),
            k("coupling: alpha2 + beta2 + delta2 <= 1 + alpha0", a2 + b2 + d2, Le, 1.0 + a0),
            k("coupling: alpha2 + delta2 < 1 + alpha0 - beta0", a2 + d2, Lt, 1.0 + a0 - b0),
        ],
        Group::Alpha3Gamma3 => vec![
            k("alpha3 > alpha0", a3, Gt, a0),
            k("alpha3 < 1 - delta1", a3, Lt, 1.0 - d1),
            k("gamma3 > gamma0", g3, Gt, g0),
            k("gamma3 < 1 - delta3", g3, Lt, 1.0 - d3),
            k("heat transport: alpha3 >= 0", a3, Ge, 0.0),
            k("heat transport: gamma3 >= 0", g3, Ge, 0.0),
            k("heat transport: alpha3 > 3/2(1/p - 1/r)", a3, Gt, sobolev_gap(ip, ir)),
            k("heat transport: gamma3 + delta3 > 1/2", g3 + d3, Gt, 0.5),
            k(
                "heat transport: alpha3 + gamma3 + delta3 >= 3/(2p) + 1/2",
                a3 + g3 + d3,
                Ge,
                1.5 * ip + 0.5,
            ),
            k(
                "dissipation: alpha3 >= max{0, 1/2 + 3/2(1/p - 1/(2r))}",
                a3,
                Ge,
                (0.5 + sobolev_gap(ip, 0.5 * ir)).max(0.0),
            ),
            k("dissipation: alpha3 <= 1", a3, Le, 1.0),
            k("coupling: alpha3 + gamma3 + delta3 <= 1 + alpha0", a3 + g3 + d3, Le, 1.0 + a0),
            k("coupling: alpha3 <= alpha0 + (1 - gamma0)/2", a3, Le, a0 + 0.5 * (1.0 - g0)),
        ],
        Group::Beta3 => vec![
            k("beta3 > beta0", b3, Gt, b0),
            k("beta3 < 1 - delta2", b3, Lt, 1.0 - d2),
            k(
                "dissipation: beta3 >= max{0, 1/2 + 3/2(1/q - 1/(2r))}",
                b3,
                Ge,
                (0.5 + sobolev_gap(iq, 0.5 * ir)).max(0.0),
            ),
            k("dissipation: beta3 <= 1", b3, Le, 1.0),
            k("coupling: beta3 <= beta0 + (1 - gamma0)/2", b3, Le, b0 + 0.5 * (1.0 - g0)),
        ],
        Group::Gamma1 => {
            let mut v = vec![
                k("gamma1 > gamma0", g1, Gt, g0),
                k("gamma1 < 1 - delta3", g1, Lt, 1.0 - d3),
                k("velocity forcing: gamma1 >= max{0, 3/2(1/r - 1/p)}", g1, Ge, sobolev_gap(ir, ip).max(0.0)),
                k("velocity forcing: gamma1 <= 1", g1, Le, 1.0),
            ];
            if br.gamma1_equality {
                v.push(k("branch: gamma1 = 1 - alpha0 + gamma0", g1, Eq, 1.0 - a0 + g0));
            } else {
                v.push(k("branch: gamma1 < 1 - alpha0 + gamma0", g1, Lt, 1.0 - a0 + g0));
            }
            v
        }
        Group::Gamma2 => {
            let mut v = vec![
                k("gamma2 > gamma0", g2, Gt, g0),
                k("gamma2 < 1 - delta3", g2, Lt, 1.0 - d3),
                k(
                    "microrotation forcing: gamma2 >= max{0, 3/2(1/r - 1/q)}",
                    g2,
                    Ge,
                    sobolev_gap(ir, iq).max(0.0),
                ),
                k("microrotation forcing: gamma2 <= 1", g2, Le, 1.0),
            ];
            if br.gamma2_equality {
                v.push(k("branch: gamma2 = 1 - beta0 + gamma0", g2, Eq, 1.0 - b0 + g0));
            } else {
                v.push(k("branch: gamma2 < 1 - beta0 + gamma0", g2, Lt, 1.0 - b0 + g0));
            }
            v
        }
    }
}

const ALL_GROUPS: [Group; 8] = [
    Group::Delta,
    Group::Alpha1,
    Group::Beta1,
    Group::Alpha2Beta2,
    Group::Alpha3Gamma3,
    Group::Beta3,
    Group::Gamma1,
    Group::Gamma2,
];

/// Hypotheses of the estimates, boxes and coupling conditions for the intermediates.
pub fn intermediate_constraints(c: &ExponentConfig, m: &Intermediates) -> Vec<Constraint> {
    ALL_GROUPS.iter().flat_map(|g| group_constraints(c, m, *g)).collect()
}

/// Chain `0 < λ < λ₁`, `λ < λ₂ < min{2λ, λ₁}`, and `λ₁ < Λ₁` when `big_lambda1` is given.
pub fn rate_constraints(c: &ExponentConfig, big_lambda1: Option<f64>) -> Vec<Constraint> {
    let (Some(l), Some(l1), Some(l2)) = (c.lambda, c.lambda1, c.lambda2) else {
        return Vec::new();
    };
    let mut v = vec![
        k("lambda > 0", l, Gt, 0.0),
        k("lambda < lambda1", l, Lt, l1),
        k("lambda < lambda2", l, Lt, l2),
        k("lambda2 < min{2 lambda, lambda1}", l2, Lt, (2.0 * l).min(l1)),
    ];
    if let Some(b) = big_lambda1 {
        v.push(k("lambda1 < first eigenvalue", l1, Lt, b));
    }
    v
}

/// Evaluates every inequality of `level`, reporting each violation with both sides.
pub fn check_config(cfg: &ExponentConfig, level: CheckLevel) -> Result<Verdict> {
    cfg.validate_fields()?;
    let checked = match level {
        CheckLevel::Base => {
            let mut v = base_constraints(cfg);
            if let Some(m) = cfg.intermediates() {
                v.extend(intermediate_constraints(cfg, &m));
            }
            v.extend(rate_constraints(cfg, None));
            v
        }
        CheckLevel::Regularity => regularity_constraints(cfg),
        CheckLevel::Classical => classical_constraints(cfg),
    };
    Ok(Verdict::from(level, checked))
}

/// Why [`select_intermediate`] failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityReport {
    pub reason: String,
    pub resolution: u32,
    pub binding: Vec<Constraint>,
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (lattice 1/{})", self.reason, self.resolution)?;
        for c in &self.binding {
            write!(f, "; {c}")?;
        }
        Ok(())
    }
}

/// Search bookkeeping: the closest miss for each group.
struct Search<'a> {
    cfg: &'a ExponentConfig,
    closest: Option<(usize, Vec<Constraint>)>,
}

impl Search<'_> {
    fn violations(&mut self, m: &Intermediates, group: Group) -> bool {
        let v: Vec<_> = group_constraints(self.cfg, m, group)
            .into_iter()
            .filter(|c| !c.satisfied())
            .collect();
        if v.is_empty() {
            return true;
        }
        if self.closest.as_ref().map_or(true, |(n, _)| v.len() < *n) {
            self.closest = Some((v.len(), v));
        }
        false
    }
}

fn lattice(res: u32) -> impl Iterator<Item = f64> + Clone {
    (1..res).map(move |j| j as f64 / res as f64)
}

/// Candidate shifts for one δ: zero when the base exponent is positive, else
/// lattice points of `(0, upper)` ordered by distance from the midpoint.
fn delta_candidates(base: f64, s: f64, res: u32) -> Vec<f64> {
    if base > 0.0 {
        return vec![0.0];
    }
    let upper = (1.0 - base).min(0.5 + 1.5 * (1.0 - 1.0 / s));
    let mid = 0.5 * upper;
    let mut c: Vec<f64> = lattice(res).filter(|x| *x < upper).collect();
    c.sort_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()).then(a.total_cmp(b)));
    c
}

fn search_alpha1(s: &mut Search, m: &mut Intermediates, res: u32) -> bool {
    for a in lattice(res) {
        m.alpha[0] = a;
        if s.violations(m, Group::Alpha1) {
            return true;
        }
    }
    false
}

fn search_beta1(s: &mut Search, m: &mut Intermediates, res: u32) -> bool {
    let c = s.cfg;
    if Branches::of(c).beta1_equality {
        m.beta[0] = 1.0 - c.alpha0 + c.beta0 - m.delta[0];
        return s.violations(m, Group::Beta1);
    }
    for b in lattice(res) {
        m.beta[0] = b;
        if s.violations(m, Group::Beta1) {
            return true;
        }
    }
    false
}

fn search_pair(s: &mut Search, m: &mut Intermediates, res: u32, group: Group) -> bool {
    for x in lattice(res) {
        for y in lattice(res) {
            match group {
                Group::Alpha2Beta2 => {
                    m.alpha[1] = x;
                    m.beta[1] = y;
                }
                _ => {
                    m.alpha[2] = x;
                    m.gamma[2] = y;
                }
            }
            if s.violations(m, group) {
                return true;
            }
        }
    }
    false
}

fn search_single(s: &mut Search, m: &mut Intermediates, res: u32, group: Group) -> bool {
    let c = s.cfg;
    let br = Branches::of(c);
    let exact = match group {
        Group::Gamma1 if br.gamma1_equality => Some(1.0 - c.alpha0 + c.gamma0),
        Group::Gamma2 if br.gamma2_equality => Some(1.0 - c.beta0 + c.gamma0),
        _ => None,
    };
    let slot = |m: &mut Intermediates, v: f64| match group {
        Group::Beta3 => m.beta[2] = v,
        Group::Gamma1 => m.gamma[0] = v,
        _ => m.gamma[1] = v,
    };
    if let Some(v) = exact {
        slot(m, v);
        return s.violations(m, group);
    }
    for v in lattice(res) {
        slot(m, v);
        if s.violations(m, group) {
            return true;
        }
    }
    false
}

fn search_at(cfg: &ExponentConfig, res: u32, s: &mut Search) -> Option<Intermediates> {
    let mut m = Intermediates {
        delta: [0.0; 3],
        alpha: [0.0; 3],
        beta: [0.0; 3],
        gamma: [0.0; 3],
    };
    let d1s = delta_candidates(cfg.alpha0, cfg.p, res);
    let d2s = delta_candidates(cfg.beta0, cfg.q, res);
    let d3s = delta_candidates(cfg.gamma0, cfg.r, res);
    for &d1 in &d1s {
        m.delta = [d1, 0.0, 0.0];
        if !search_alpha1(s, &mut m, res) {
            continue;
        }
        for &d2 in &d2s {
            m.delta[1] = d2;
            if !(search_beta1(s, &mut m, res)
                && search_pair(s, &mut m, res, Group::Alpha2Beta2)
                && search_single(s, &mut m, res, Group::Beta3))
            {
                continue;
            }
            for &d3 in &d3s {
                m.delta[2] = d3;
                if !s.violations(&m, Group::Delta) {
                    continue;
                }
                if search_pair(s, &mut m, res, Group::Alpha3Gamma3)
                    && search_single(s, &mut m, res, Group::Gamma1)
                    && search_single(s, &mut m, res, Group::Gamma2)
                {
                    return Some(m);
                }
            }
        }
    }
    None
}

/// Completes a base configuration with shifts and intermediate exponents.
///
/// Each exponent is the first point of the absolute lattice `j/res` (ascending)
/// meeting its constraints; equality branches are set exactly. The lattice is
/// refined from 1/32 to 1/256 before giving up.
pub fn select_intermediate(cfg: &ExponentConfig) -> Result<ExponentConfig> {
    cfg.validate_fields()?;
    let base = cfg.base_only();
    let base_violations: Vec<_> = base_constraints(&base).into_iter().filter(|c| !c.satisfied()).collect();
    if !base_violations.is_empty() {
        return Err(Error::Infeasible(Box::new(InfeasibilityReport {
            reason: "base conditions do not hold".into(),
            resolution: 0,
            binding: base_violations,
        })));
    }
    let mut search = Search {
        cfg: &base,
        closest: None,
    };
    for res in RESOLUTIONS {
        if let Some(m) = search_at(&base, res, &mut search) {
            let out = base.with_intermediates(&m);
            debug_assert!(check_config(&out, CheckLevel::Base).map(|v| v.passed).unwrap_or(false));
            return Ok(out);
        }
    }
    Err(Error::Infeasible(Box::new(InfeasibilityReport {
        reason: "no lattice point satisfies every intermediate condition".into(),
        resolution: *RESOLUTIONS.last().unwrap(),
        binding: search.closest.map(|(_, v)| v).unwrap_or_default(),
    })))
}
