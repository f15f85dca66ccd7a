use std::f64::consts::PI;

use approx::assert_relative_eq;
use micropolar::spectral::random::{random_field, random_solenoidal, rng};
use micropolar::spectral::{
    apply_operator, lambda1, leray_project, norm, semigroup_apply, spectral_shells, to_physical, to_spectral, GridSpec,
    NormRequest, OperatorKind, OperatorSymbol, PhysicalField, SpectralField,
};
use micropolar::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn g2(n: usize) -> GridSpec {
    GridSpec::new(2, n).unwrap()
}

#[test]
fn grid_validation() {
    assert!(GridSpec::new(4, 16).is_err());
    assert!(GridSpec::new(2, 3).is_err());
    assert!(GridSpec::new(2, 16).unwrap().with_length(-1.0).is_err());
    assert!(GridSpec::new(2, 4).unwrap().with_dealias(0.1).is_err());
    assert_eq!(g2(32).cutoff(), 10);
    assert_eq!(g2(64).cutoff(), 21);
    assert_eq!(g2(48).cutoff(), 15);
}

#[test]
fn constant_field_has_only_dc_mode() {
    let g = g2(8);
    let p = PhysicalField::from_fn(g, 1, |_| vec![1.0]);
    let f = to_spectral(&p).unwrap();
    assert_relative_eq!(f.get(0, [0, 0, 0]).re, 1.0, epsilon = 1e-15);
    let others: f64 = f.coeffs()[1..].iter().map(|z| z.norm()).sum();
    assert!(others < 1e-14);
}

#[test]
fn cosine_has_half_coefficients() {
    let g = g2(8);
    let p = PhysicalField::from_fn(g, 1, |x| vec![x[0].cos()]);
    let f = to_spectral(&p).unwrap();
    assert_relative_eq!(f.get(0, [1, 0, 0]).re, 0.5, epsilon = 1e-15);
    assert_relative_eq!(f.get(0, [-1, 0, 0]).re, 0.5, epsilon = 1e-15);
}

#[test]
fn transform_size_mismatch_is_config_error() {
    let g = g2(8);
    let p = PhysicalField {
        grid: g,
        components: 1,
        data: vec![0.0; 10],
    };
    assert!(matches!(to_spectral(&p), Err(Error::Config(_))));
}

#[test]
fn random_round_trip_and_direct_evaluation() {
    for dim in [2, 3] {
        let g = GridSpec::new(dim, 8).unwrap();
        let mut r = rng(3);
        let data: Vec<f64> = (0..g.points()).map(|_| rand::Rng::random::<f64>(&mut r) - 0.5).collect();
        let p = PhysicalField {
            grid: g,
            components: 1,
            data: data.clone(),
        };
        let f = to_spectral(&p).unwrap();
        assert!(f.hermitian_defect() == 0.0);
        let back = to_physical(&f);
        let scale = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in back.data.iter().zip(&data) {
            assert!((a - b).abs() <= 1e-13 * scale);
        }
        let j = 5;
        let x = micropolar::spectral::grid_point(&g, j);
        let modes = g.modes();
        let direct: f64 = (0..g.points())
            .map(|idx| {
                let kv = modes.kvec[idx];
                let ph = kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2];
                (f.coeffs()[idx] * Complex64::from_polar(1.0, ph)).re
            })
            .sum();
        assert!((direct - data[j]).abs() <= 1e-13);
    }
}

#[test]
fn leray_examples() {
    let g = g2(16);
    let mut r = rng(1);
    let phi = random_field(g, 1, 2.0, 1.0, &mut r);
    let grad = phi.gradient().unwrap();
    assert!(leray_project(&grad).unwrap().coeff_norm() < 1e-15);

    let sol = random_solenoidal(g, 2.0, 1.0, &mut r);
    let p = leray_project(&sol).unwrap();
    assert!(p.max_abs_diff(&sol) <= 1e-14);

    let single = SpectralField::single_mode(g, [1, 0, 0], &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(leray_project(&single).unwrap().coeff_norm() == 0.0);

    let scalar = SpectralField::scalar_zeros(g);
    assert!(matches!(leray_project(&scalar), Err(Error::Type(_))));
}

#[test]
fn operator_examples() {
    let g = g2(16);
    let theta = SpectralField::single_mode(g, [1, 0, 0], &[c(0.3, 0.2)]).unwrap();
    let b = OperatorSymbol::new(OperatorKind::LaplaceB, g, 1.0);
    assert!(apply_operator(&b, &theta).unwrap().max_abs_diff(&theta) < 1e-16);

    let u = SpectralField::single_mode(g, [2, 0, 0], &[c(0.0, 0.0), c(1.0, 0.5), c(0.0, 0.0)]).unwrap();
    let a = OperatorSymbol::new(OperatorKind::StokesA, g, 0.5);
    let au = apply_operator(&a, &u).unwrap();
    assert!(au.max_abs_diff(&u.scale(2.0)) < 1e-14);

    let w = SpectralField::single_mode(g, [1, 0, 0], &[c(0.7, 0.1), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let gam = OperatorSymbol::new(OperatorKind::EllipticGamma, g, 1.0);
    assert!(apply_operator(&gam, &w).unwrap().max_abs_diff(&w.scale(2.0)) < 1e-15);

    let mut with_mean = SpectralField::single_mode(g, [0, 0, 0], &[c(1.0, 0.0)]).unwrap();
    with_mean = with_mean.add(&theta).unwrap();
    let neg = OperatorSymbol::new(OperatorKind::LaplaceB, g, -0.5);
    assert!(matches!(apply_operator(&neg, &with_mean), Err(Error::Singular(_))));
    assert!(matches!(apply_operator(&a, &theta), Err(Error::Type(_))));
}

#[test]
fn semigroup_examples() {
    let g = g2(16);
    let b = OperatorSymbol::new(OperatorKind::LaplaceB, g, 1.0);
    let theta = SpectralField::single_mode(g, [2, 0, 0], &[c(1.0, -1.0)]).unwrap();
    assert_eq!(semigroup_apply(&b, 0.0, &theta).unwrap(), theta);
    let s = semigroup_apply(&b, 0.25, &theta).unwrap();
    assert!(s.max_abs_diff(&theta.scale((-1.0f64).exp())) < 1e-16);
    assert!(matches!(semigroup_apply(&b, -1.0, &theta), Err(Error::Domain(_))));
    let half = OperatorSymbol::new(OperatorKind::LaplaceB, g, 0.5);
    assert!(semigroup_apply(&half, 1.0, &theta).is_err());

    let unit = SpectralField::single_mode(g, [1, 0, 0], &[c(1.0, 0.0)]).unwrap();
    let t = 0.7;
    let d = semigroup_apply(&b, t, &unit).unwrap();
    assert_relative_eq!(d.get(0, [1, 0, 0]).re, (-t).exp(), max_relative = 1e-15);
}

#[test]
fn lambda1_examples() {
    assert_relative_eq!(lambda1(&g2(8)), 1.0, epsilon = 1e-15);
    assert_relative_eq!(lambda1(&g2(8).with_length(PI).unwrap()), 4.0, epsilon = 1e-14);
}

#[test]
fn norm_examples() {
    for dim in [2, 3] {
        let g = GridSpec::new(dim, 8).unwrap();
        let z = SpectralField::vector_zeros(g);
        for req in [
            NormRequest::Lp { s: 3.0 },
            NormRequest::Wks { k: 2, s: 2.0 },
            NormRequest::Xalpha { alpha: 0.5, p: 4.0 },
            NormRequest::Ybeta { beta: 0.5, q: 2.0 },
        ] {
            assert_eq!(norm(&z, req).unwrap(), 0.0);
        }
        let s = to_spectral(&PhysicalField::from_fn(g, 1, |x| vec![x[0].sin()])).unwrap();
        let expected = (2.0 * PI).sqrt().powi(dim as i32 - 1) * PI.sqrt();
        assert_relative_eq!(norm(&s, NormRequest::Lp { s: 2.0 }).unwrap(), expected, max_relative = 1e-13);
        assert_relative_eq!(norm(&s, NormRequest::Lp { s: 2.0001 }).unwrap(), expected, max_relative = 1e-3);
    }
    let g = g2(16);
    let u = SpectralField::single_mode(g, [1, 2, 0], &[c(2.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let mu: f64 = 5.0;
    let l2 = norm(&u, NormRequest::Lp { s: 2.0 }).unwrap();
    let x = norm(&u, NormRequest::Xalpha { alpha: 0.3, p: 2.0 }).unwrap();
    assert_relative_eq!(x, mu.powf(0.3) * l2, max_relative = 1e-13);
    assert!(matches!(norm(&u, NormRequest::Lp { s: 1.0 }), Err(Error::Domain(_))));
    assert!(matches!(norm(&u, NormRequest::Xalpha { alpha: 1.5, p: 2.0 }), Err(Error::Domain(_))));
}

#[test]
fn gradient_seminorm_matches_half_power_for_solenoidal_fields() {
    let g = g2(16);
    let mut r = rng(9);
    let u = random_solenoidal(g, 2.0, 1.0, &mut r);
    let grad = norm(&u, NormRequest::GradSeminorm { k: 1, s: 2.0 }).unwrap();
    let x = norm(&u, NormRequest::Xalpha { alpha: 0.5, p: 2.0 }).unwrap();
    assert_relative_eq!(grad, x, max_relative = 1e-13);
    let quad = norm(&u, NormRequest::GradSeminorm { k: 1, s: 2.000000001 }).unwrap();
    assert_relative_eq!(grad, quad, max_relative = 1e-7);
}

#[test]
fn smoothing_single_mode_exact() {
    let g = g2(16);
    let u = SpectralField::single_mode(g, [0, 3, 0], &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let a = OperatorSymbol::new(OperatorKind::StokesA, g, 1.0);
    let aa = OperatorSymbol::new(OperatorKind::StokesA, g, 0.75);
    let t = 0.2;
    let v = apply_operator(&aa, &semigroup_apply(&a, t, &u).unwrap()).unwrap();
    let mu: f64 = 9.0;
    assert_relative_eq!(v.l2_norm(), mu.powf(0.75) * (-t * mu).exp() * u.l2_norm(), max_relative = 1e-13);
}

fn arb_field(dim: usize, comps: usize) -> impl Strategy<Value = SpectralField> {
    any::<u64>().prop_map(move |seed| {
        let g = GridSpec::new(dim, 8).unwrap();
        let mut r = rng(seed);
        random_field(g, comps, 1.5, 1.0, &mut r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leray_idempotent_and_divergence_free(v in arb_field(3, 3)) {
        let p = leray_project(&v).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(pp.max_abs_diff(&p) <= 1e-14);
        let div = p.divergence().unwrap();
        prop_assert!(div.coeffs().iter().all(|z| z.norm() <= 1e-13 * v.l2_norm()));
    }

    #[test]
    fn fractional_powers_compose(f in arb_field(2, 3), a in 0.0f64..1.0, b in -0.5f64..1.0) {
        for kind in [OperatorKind::StokesA, OperatorKind::EllipticGamma] {
            let g = *f.grid();
            let x = if kind == OperatorKind::StokesA { leray_project(&f).unwrap() } else { f.clone() };
            let pa = OperatorSymbol::new(kind, g, a);
            let pb = OperatorSymbol::new(kind, g, b);
            let pab = OperatorSymbol::new(kind, g, a + b);
            let lhs = apply_operator(&pa, &apply_operator(&pb, &x).unwrap()).unwrap();
            let rhs = apply_operator(&pab, &x).unwrap();
            let scale = rhs.coeff_norm().max(lhs.coeff_norm());
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-13 * scale.max(1e-300));
        }
    }

    #[test]
    fn semigroup_law(f in arb_field(2, 3)) {
        let g = *f.grid();
        for kind in [OperatorKind::StokesA, OperatorKind::EllipticGamma, OperatorKind::LaplaceB] {
            let op = OperatorSymbol::new(kind, g, 1.0);
            let two = semigroup_apply(&op, 0.1, &semigroup_apply(&op, 0.1, &f).unwrap()).unwrap();
            let one = semigroup_apply(&op, 0.2, &f).unwrap();
            prop_assert!(two.max_abs_diff(&one) <= 1e-13 * f.coeff_norm());
        }
    }

    #[test]
    fn parseval(f in arb_field(2, 1)) {
        let phys = to_physical(&f);
        let quad: f64 = phys.data.iter().map(|x| x * x).sum::<f64>() * f.grid().volume() / f.grid().points() as f64;
        prop_assert!((quad.sqrt() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn hoelder_semigroup_bound(f in arb_field(2, 1), alpha in 0.05f64..0.95, t in 1e-3f64..2.0) {
        let g = *f.grid();
        let b = OperatorSymbol::new(OperatorKind::LaplaceB, g, 1.0);
        let diff = semigroup_apply(&b, t, &f).unwrap().sub(&f).unwrap().l2_norm();
        let ba = apply_operator(&OperatorSymbol::new(OperatorKind::LaplaceB, g, alpha), &f).unwrap().l2_norm();
        // sup_{x>0} (1 - e^{-x}) / x^α, bounded by 1 for α in (0,1)
        let c = (1..4000).map(|i| {
            let x = i as f64 * 0.01;
            (1.0 - (-x).exp()) / x.powf(alpha)
        }).fold(0.0f64, f64::max).max(1.0);
        prop_assert!(diff <= c * t.powf(alpha) * ba * (1.0 + 1e-12));
    }
}

#[test]
fn shells_reproduce_semigroup_norms() {
    let g = g2(16);
    let f = random_field(g, 3, 1.5, 1.0, &mut rng(3));
    let s = random_field(g, 1, 1.5, 1.0, &mut rng(4));
    for (kind, x) in [
        (OperatorKind::StokesA, leray_project(&f).unwrap()),
        (OperatorKind::EllipticGamma, f.clone()),
        (OperatorKind::LaplaceB, s),
    ] {
        let shells = spectral_shells(kind, &Default::default(), &x);
        let total: f64 = shells.iter().map(|s| s.1).sum();
        assert_relative_eq!(total.sqrt(), x.l2_norm(), max_relative = 1e-13);
        assert!(shells.windows(2).all(|w| w[0].0 < w[1].0));
        let op = OperatorSymbol::new(kind, g, 1.0);
        for t in [0.01, 0.3] {
            let direct = semigroup_apply(&op, t, &x).unwrap().l2_norm();
            let via: f64 = shells.iter().map(|(mu, e)| (-2.0 * t * mu).exp() * e).sum();
            assert_relative_eq!(via.sqrt(), direct, max_relative = 1e-12);
        }
    }
}
