use std::f64::consts::PI;

use micropolar::exponents::{select_intermediate, ExponentConfig};
use micropolar::mild::{
    beta_function, duhamel_integral, duhamel_trajectory, global_solve, initial_trajectory, k0_samples,
    km_recursion, local_horizon, mild_residual, picard_solve, picard_step, semigroup_constant, spectral_radius3,
    GlobalConfig, LemmaConstants, Model, PicardConfig, PicardStatus, RecursionInputs,
};
use micropolar::nonlinear::CouplingParams;
use micropolar::spectral::random::{random_field, random_low_mode, rng};
use micropolar::spectral::{GridSpec, OperatorKind, OperatorScales, OperatorSymbol, SpectralField};
use micropolar::Error;
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid() -> GridSpec {
    GridSpec::new(2, 16).unwrap()
}

fn small_data(seed: u64, amp: f64) -> (SpectralField, SpectralField, SpectralField) {
    let g = grid();
    let mut r = rng(seed);
    (
        random_low_mode(g, 3, 3, 2.0, amp, &mut r),
        random_low_mode(g, 3, 3, 2.0, amp, &mut r),
        random_low_mode(g, 1, 3, 2.0, amp, &mut r),
    )
}

fn base_cfg() -> ExponentConfig {
    select_intermediate(&ExponentConfig::base(2.0, 2.0, 2.0, 0.5, 0.5, 0.0)).unwrap()
}

/// Adaptive Simpson on a smooth integrand.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `∫_0^1 s^{x-1}(1-s)^{y-1} ds` with both endpoint singularities removed by substitution.
fn beta_quadrature(x: f64, y: f64) -> f64 {
    // s = v^{1/x} on [0, 1/2], 1 - s = w^{1/y} on [1/2, 1]
    let left = |v: f64| (1.0 - v.powf(1.0 / x)).powf(y - 1.0) / x;
    let right = |w: f64| (1.0 - w.powf(1.0 / y)).powf(x - 1.0) / y;
    simpson(&left, 0.0, 0.5f64.powf(x), 1e-14) + simpson(&right, 0.0, 0.5f64.powf(y), 1e-14)
}

#[test]
fn beta_function_values() {
    assert!((beta_function(1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    assert!((beta_function(0.5, 0.5).unwrap() - PI).abs() < 1e-12 * PI);
    let oracle = beta_quadrature(0.3, 0.8);
    let got = beta_function(0.3, 0.8).unwrap();
    assert!((got - oracle).abs() < 1e-10 * oracle, "{got} vs {oracle}");
    assert!(matches!(beta_function(0.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(beta_function(1.0, -0.5), Err(Error::Domain(_))));
}

#[test]
fn semigroup_constant_closed_form() {
    assert_eq!(semigroup_constant(0.0, 1.0, 0.5).unwrap(), 1.0);
    // direct maximization of t^a μ^a e^{-(μ-λ)t} at μ = μ_min
    let (a, mu, lam) = (0.5, 1.0, 0.5);
    let best = (1..200_000)
        .map(|i| {
            let t = i as f64 * 1e-4;
            (t * mu).powf(a) * (-(mu - lam) * t).exp()
        })
        .fold(0.0, f64::max);
    assert!((semigroup_constant(a, mu, lam).unwrap() - best).abs() < 1e-8);
    assert!(semigroup_constant(0.5, 1.0, 1.0).is_err());
}

#[test]
fn zero_data_is_a_fixed_point() {
    let g = grid();
    let z3 = SpectralField::vector_zeros(g);
    let z1 = SpectralField::scalar_zeros(g);
    let cfg = PicardConfig::new(0.5, 20);
    let (traj, rep) = picard_solve(&z3, &z3, &z1, &cfg, &Model::default()).unwrap();
    assert_eq!(rep.status, PicardStatus::Converged);
    assert_eq!(rep.iterations.len(), 1);
    assert_eq!(rep.final_difference(), 0.0);
    assert!(traj.u.iter().chain(&traj.omega).chain(&traj.theta).all(|f| f.coeff_norm() == 0.0));
}

#[test]
fn single_mode_free_decay_is_exact() {
    let g = grid();
    let z3 = SpectralField::vector_zeros(g);
    let th = SpectralField::single_mode(g, [2, 1, 0], &[c(0.3, -0.1)]).unwrap();
    let mut cfg = PicardConfig::new(1.0, 16);
    cfg.graded = true;
    let model = Model::default();
    let traj = initial_trajectory(&z3, &z3, &th, &cfg, &model).unwrap();
    let mu = model.params.scales().b * 5.0;
    for (t, f) in traj.times.iter().zip(&traj.theta) {
        let expected = th.scale((-t * mu).exp());
        assert!(f.max_abs_diff(&expected) <= 1e-15);
    }
    assert_eq!(traj.theta[0], th);
}

#[test]
fn initial_trajectory_rejects_compressible_velocity() {
    let g = grid();
    let mut r = rng(9);
    let u = random_field(g, 3, 2.0, 1.0, &mut r);
    let z3 = SpectralField::vector_zeros(g);
    let z1 = SpectralField::scalar_zeros(g);
    let e = initial_trajectory(&u, &z3, &z1, &PicardConfig::new(0.1, 10), &Model::default());
    assert!(matches!(e, Err(Error::Precondition(_))));
}

fn times_nonuniform(t: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t * (i as f64 / n as f64).powf(1.7)).collect()
}

#[test]
fn duhamel_constant_and_linear_data_exact() {
    let g = grid();
    let mu = 5.0;
    let op = OperatorSymbol::generator(OperatorKind::LaplaceB, g, OperatorScales::default());
    let n_hat = SpectralField::single_mode(g, [1, 2, 0], &[c(0.7, 0.2)]).unwrap();
    let times = times_nonuniform(1.3, 17);
    let constant: Vec<_> = times.iter().map(|_| n_hat.clone()).collect();
    let linear: Vec<_> = times.iter().map(|s| n_hat.scale(*s)).collect();
    let ic = duhamel_trajectory(&op, &constant, &times).unwrap();
    let il = duhamel_trajectory(&op, &linear, &times).unwrap();
    for (j, &t) in times.iter().enumerate() {
        let ec = n_hat.scale((1.0 - (-t * mu).exp()) / mu);
        let el = n_hat.scale(t / mu - (1.0 - (-t * mu).exp()) / (mu * mu));
        assert!(ic[j].max_abs_diff(&ec) <= 1e-14);
        assert!(il[j].max_abs_diff(&el) <= 1e-12);
    }
    let zero: Vec<_> = times.iter().map(|_| SpectralField::scalar_zeros(g)).collect();
    assert_eq!(duhamel_integral(&op, &zero, &times, times[5]).unwrap().coeff_norm(), 0.0);
    assert!(matches!(duhamel_integral(&op, &constant, &times, 0.123456), Err(Error::Domain(_))));
}

#[test]
fn duhamel_longitudinal_gamma_mode() {
    let g = grid();
    let scales = OperatorScales::default();
    let op = OperatorSymbol::generator(OperatorKind::EllipticGamma, g, scales);
    // k = (1, 1): longitudinal part along k, transverse along (1, -1) and z
    let n_hat = SpectralField::single_mode(g, [1, 1, 0], &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.5)]).unwrap();
    let times = times_nonuniform(0.8, 9);
    let data: Vec<_> = times.iter().map(|_| n_hat.clone()).collect();
    let out = duhamel_trajectory(&op, &data, &times).unwrap();
    let mu_l = scales.gamma_longitudinal * 2.0;
    let mu_t = scales.gamma_transverse * 2.0;
    let t = *times.last().unwrap();
    let long = SpectralField::single_mode(g, [1, 1, 0], &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let trans = SpectralField::single_mode(g, [1, 1, 0], &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.5)]).unwrap();
    let expected = long
        .scale((1.0 - (-t * mu_l).exp()) / mu_l)
        .add(&trans.scale((1.0 - (-t * mu_t).exp()) / mu_t))
        .unwrap();
    assert!(out.last().unwrap().max_abs_diff(&expected) < 1e-14);
}

/// Per-mode linear system for `(û, ω̂)` with transport and dissipation removed.
fn linear_mode_matrix(k: [f64; 3], p: &CouplingParams) -> DMatrix<Complex64> {
    let s = p.scales();
    let spin = 2.0 * p.mu_r / p.rho;
    let k2: f64 = k.iter().map(|x| x * x).sum();
    let i = c(0.0, 1.0);
    // (iκ×v)_a = i ε_{abc} κ_b v_c
    let cross = |a: usize, cc: usize| -> Complex64 {
        if a == cc {
            return c(0.0, 0.0);
        }
        let b = 3 - a - cc;
        let sign = if (a + 1) % 3 == b { 1.0 } else { -1.0 };
        i * (sign * k[b])
    };
    let mut m = DMatrix::<Complex64>::zeros(6, 6);
    for a in 0..3 {
        m[(a, a)] = c(-s.a * k2, 0.0);
        for b in 0..3 {
            m[(a, 3 + b)] = cross(a, b) * spin;
            m[(3 + a, b)] = cross(a, b) * spin;
            let proj = k[a] * k[b] / k2;
            let gam = s.gamma_transverse * (if a == b { k2 } else { 0.0 } - k[a] * k[b])
                + s.gamma_longitudinal * k2 * proj;
            m[(3 + a, 3 + b)] = c(-gam, 0.0) + if a == b { c(-2.0 * spin, 0.0) } else { c(0.0, 0.0) };
        }
    }
    m
}

#[test]
fn linear_regime_matches_matrix_exponential() {
    let g = grid();
    let p = CouplingParams::default();
    let kint = [1i64, 2, 0];
    let kv = [1.0, 2.0, 0.0];
    // solenoidal: amplitude orthogonal to k
    let ua = [c(0.2, 0.1), c(-0.1, -0.05), c(0.0, 0.3)];
    let wa = [c(0.1, 0.0), c(0.0, -0.2), c(0.15, 0.05)];
    let u0 = SpectralField::single_mode(g, kint, &ua).unwrap();
    let w0 = SpectralField::single_mode(g, kint, &wa).unwrap();
    let th0 = SpectralField::scalar_zeros(g);
    let t_end = 0.5;
    let m = linear_mode_matrix(kv, &p) * c(t_end, 0.0);
    let e = m.exp();
    let x0: Vec<Complex64> = ua.iter().chain(&wa).cloned().collect();
    let x = &e * DMatrix::from_column_slice(6, 1, &x0);
    let mut errs = Vec::new();
    for npu in [40usize, 80] {
        let mut cfg = PicardConfig::new(t_end, npu);
        cfg.linear_only = true;
        cfg.tol = 1e-14;
        cfg.m_max = 80;
        let (traj, rep) = picard_solve(&u0, &w0, &th0, &cfg, &Model::new(p, Default::default(), Default::default())).unwrap();
        assert_eq!(rep.status, PicardStatus::Converged);
        let (u, w, _) = traj.last();
        let mut err: f64 = 0.0;
        for a in 0..3 {
            err = err.max((u.get(a, kint) - x[a]).norm());
            err = err.max((w.get(a, kint) - x[3 + a]).norm());
        }
        errs.push(err);
    }
    assert!(errs[0] < 1e-4, "{errs:?}");
    let order = (errs[0] / errs[1]).log2();
    assert!(order > 1.8, "{errs:?}");
}

#[test]
fn first_step_matches_fine_quadrature() {
    let (u0, w0, th0) = small_data(3, 0.3);
    let model = Model::default();
    let npu = 20;
    let cfg = PicardConfig::new(0.5, npu);
    let coarse = picard_step(&initial_trajectory(&u0, &w0, &th0, &cfg, &model).unwrap(), &cfg, &model).unwrap();
    let fine_cfg = PicardConfig::new(0.5, npu * 16);
    let fine = picard_step(&initial_trajectory(&u0, &w0, &th0, &fine_cfg, &model).unwrap(), &fine_cfg, &model).unwrap();
    let h = 1.0 / npu as f64;
    for (j, t) in coarse.times.iter().enumerate() {
        let jf = fine.node_of(*t).unwrap();
        for (a, b) in [(&coarse.u[j], &fine.u[jf]), (&coarse.omega[j], &fine.omega[jf]), (&coarse.theta[j], &fine.theta[jf])] {
            let scale = b.l2_norm().max(1e-300);
            assert!(a.sub(b).unwrap().l2_norm() <= 10.0 * h * h * scale, "node {j}");
        }
    }
}

#[test]
fn small_data_contracts_and_solves_integral_equations() {
    let (u0, w0, th0) = small_data(11, 0.1);
    let model = Model::default();
    let mut cfg = PicardConfig::new(0.3, 40);
    cfg.weighted_exponents = Some(base_cfg());
    let (traj, rep) = picard_solve(&u0, &w0, &th0, &cfg, &model).unwrap();
    assert_eq!(rep.status, PicardStatus::Converged, "{:?}", rep.iterations);
    assert!(rep.ratios().iter().all(|r| *r < 1.0));
    assert_eq!(rep.norm_tags.len(), 9);
    let res = mild_residual(&traj, &cfg, &model).unwrap();
    assert!(res.iter().all(|r| *r <= 10.0 * cfg.tol), "{res:?}");
}

#[test]
fn restart_matches_single_window() {
    let (u0, w0, th0) = small_data(5, 0.2);
    let model = Model::default();
    let exps = base_cfg().with_rates(0.5, 0.75, 0.6);
    let mut cfg = PicardConfig::new(0.4, 50);
    cfg.tol = 1e-12;
    let (one, _) = picard_solve(&u0, &w0, &th0, &cfg, &model).unwrap();
    let run = global_solve(&u0, &w0, &th0, &exps, &cfg, &model, &GlobalConfig { t_total: 0.4, window: 0.2, bound_constant: 1.0 })
        .unwrap();
    let two = run.trajectory.unwrap();
    assert_eq!(two.nodes(), one.nodes());
    let mut half = cfg.clone();
    half.nodes_per_unit *= 2;
    let (fine, _) = picard_solve(&u0, &w0, &th0, &half, &model).unwrap();
    let quad_err = one.last().0.sub(fine.last().0).unwrap().l2_norm();
    let restart = one.last().0.sub(two.last().0).unwrap().l2_norm();
    assert!(restart <= 10.0 * quad_err, "{restart} vs {quad_err}");
}

#[test]
fn zero_data_global_e_functions_vanish() {
    let g = grid();
    let z3 = SpectralField::vector_zeros(g);
    let z1 = SpectralField::scalar_zeros(g);
    let exps = base_cfg().with_rates(0.5, 0.75, 0.6);
    let run = global_solve(
        &z3,
        &z3,
        &z1,
        &exps,
        &PicardConfig::new(1.0, 10),
        &Model::default(),
        &GlobalConfig { t_total: 2.0, window: 0.5, bound_constant: 1.0 },
    )
    .unwrap();
    assert!(run.elog.iter().all(|e| e.max == 0.0));
    assert!(!run.bound_exceeded && !run.aborted);
    assert_eq!(run.windows.len(), 4);
}

#[test]
fn global_requires_rates() {
    let (u0, w0, th0) = small_data(1, 0.1);
    let e = global_solve(
        &u0,
        &w0,
        &th0,
        &base_cfg(),
        &PicardConfig::new(1.0, 10),
        &Model::default(),
        &GlobalConfig { t_total: 1.0, window: 0.5, bound_constant: 1.0 },
    );
    assert!(matches!(e, Err(Error::Config(_))));
}

fn inputs<'a>(cfg: &'a ExponentConfig, params: &'a CouplingParams, k: &'a LemmaConstants) -> RecursionInputs<'a> {
    RecursionInputs {
        cfg,
        params,
        constants: k,
        grid: grid(),
        lf: 0.0,
        lg: 0.0,
    }
}

#[test]
fn km_recursion_zero_and_monotone() {
    let cfg = base_cfg();
    let params = CouplingParams::default();
    let k = LemmaConstants::uniform(1.0);
    let model = Model::default();
    let g = grid();
    let z3 = SpectralField::vector_zeros(g);
    let z1 = SpectralField::scalar_zeros(g);
    let pc = PicardConfig::new(1e-4, 1_000_000);
    let zt = initial_trajectory(&z3, &z3, &z1, &pc, &model).unwrap();
    let k0 = k0_samples(&zt, &cfg, &model, pc.exec).unwrap();
    let tr = km_recursion(&k0, &inputs(&cfg, &params, &k), 10).unwrap();
    assert!(tr.history.iter().all(|h| h.is_zero()));

    let (u0, w0, th0) = small_data(2, 0.05);
    let traj = initial_trajectory(&u0, &w0, &th0, &pc, &model).unwrap();
    let k0 = k0_samples(&traj, &cfg, &model, pc.exec).unwrap();
    assert!(k0.values.envelope()[0] == 0.0);
    let tr = km_recursion(&k0, &inputs(&cfg, &params, &k), 200).unwrap();
    assert!(tr.is_monotone());
    assert!(tr.converged, "{:?}", tr.differences.last());
    assert!(tr.current().envelope()[0] == 0.0);

    let bad = LemmaConstants { c: [1.0, 1.0, f64::NAN, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0] };
    assert!(matches!(km_recursion(&k0, &inputs(&cfg, &params, &bad), 3), Err(Error::Config(_))));
}

#[test]
fn horizon_zero_data_and_monotone_in_data() {
    let cfg = base_cfg();
    let params = CouplingParams::default();
    let k = LemmaConstants::uniform(0.5);
    let model = Model::default();
    let g = grid();
    let pc = PicardConfig::new(0.5, 200);
    let z3 = SpectralField::vector_zeros(g);
    let z1 = SpectralField::scalar_zeros(g);
    let zt = initial_trajectory(&z3, &z3, &z1, &pc, &model).unwrap();
    let k0 = k0_samples(&zt, &cfg, &model, pc.exec).unwrap();
    let h = local_horizon(&k0, &inputs(&cfg, &params, &k)).unwrap();
    assert_eq!(h.t_star, 0.5);

    let (u0, w0, th0) = small_data(4, 0.02);
    let traj = initial_trajectory(&u0, &w0, &th0, &pc, &model).unwrap();
    let k0 = k0_samples(&traj, &cfg, &model, pc.exec).unwrap();
    let mut last = f64::INFINITY;
    for s in [1.0, 2.0, 4.0, 8.0] {
        match local_horizon(&k0.scaled(s), &inputs(&cfg, &params, &k)) {
            Ok(h) => {
                assert!(h.t_star <= last);
                assert!(h.t_star_inflated <= h.t_star);
                last = h.t_star;
            }
            Err(Error::Domain(_)) => last = 0.0,
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn equality_boundary_recursion_reports_domain_error() {
    let cfg = select_intermediate(&ExponentConfig::base(2.0, 2.0, 2.0, 0.875, 0.375, 0.0)).unwrap();
    let params = CouplingParams::default();
    let k = LemmaConstants::uniform(1.0);
    let times = vec![0.0, 0.1];
    let k0 = micropolar::mild::K0Samples {
        times,
        values: micropolar::mild::KValues {
            k1: [vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]],
            k2: [vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]],
            k3: [vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]],
        },
    };
    assert!(matches!(km_recursion(&k0, &inputs(&cfg, &params, &k), 1), Err(Error::Domain(_))));
}

#[test]
fn spectral_radius_of_k_at_zero() {
    let c0 = 3.0;
    let k = [[0.0, c0, c0], [0.0, 0.0, c0], [0.0, 0.0, 0.0]];
    assert!(spectral_radius3(&k) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cardano_matches_eigensolve(v in proptest::collection::vec(-3.0f64..3.0, 9)) {
        let m = [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]];
        let na = Matrix3::from_row_slice(&v);
        let oracle = na.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let got = spectral_radius3(&m);
        prop_assert!((got - oracle).abs() <= 1e-7 * (1.0 + oracle), "{} vs {}", got, oracle);
    }

    #[test]
    fn cardano_nonnegative_k_matrix(k0 in 0.0f64..0.5, t in 0.0f64..1.0, c0 in 0.1f64..3.0) {
        let m = [[c0 * k0, c0, c0], [c0 * (k0 + t.sqrt()), c0 * (k0 + t), c0], [c0 * k0, c0 * k0, c0 * k0]];
        let na = Matrix3::new(m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]);
        let oracle = na.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((spectral_radius3(&m) - oracle).abs() <= 1e-7 * (1.0 + oracle));
    }
}
