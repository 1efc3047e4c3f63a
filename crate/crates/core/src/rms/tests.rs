use super::*;
use crate::groups::chamber_rule;
use crate::rootsys::build_root_system;

fn sl2rs() -> RootSystem {
    build_root_system("sl(2,R)").unwrap()
}

fn elem(a: f64, t: f64, b: f64) -> GroupElement {
    GroupElement::new(sl2::to_dmatrix(&sl2::kak(a, t, b))).unwrap()
}

/// Composite Simpson on `[0, r]` with `m` (even) panels.
fn simpson(r: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = r / m as f64;
    let mut acc = f(0.0) + f(r);
    for i in 1..m {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn sample_function() -> TestFunction {
    TestFunction::new(
        2,
        vec![
            Component {
                profile: Profile::new(1.5, 0.0, 2).unwrap(),
                terms: vec![
                    AngularTerm { m: 0, n: 0, coeff: Complex64::new(1.0, 0.0) },
                    AngularTerm { m: 2, n: 2, coeff: Complex64::new(0.3, -0.2) },
                ],
            },
            Component {
                profile: Profile::new(2.0, 1.2, 1).unwrap(),
                terms: vec![
                    AngularTerm { m: 3, n: -1, coeff: Complex64::new(0.5, 0.5) },
                    AngularTerm { m: -2, n: 0, coeff: Complex64::new(-0.7, 0.0) },
                ],
            },
        ],
    )
    .unwrap()
}

#[test]
fn validation() {
    let p = Profile::new(1.0, 0.0, 1).unwrap();
    let term = |m, n| AngularTerm { m, n, coeff: Complex64::new(1.0, 0.0) };
    let comp = |terms| Component { profile: p, terms };
    assert!(TestFunction::new(2, vec![comp(vec![term(1, 0)])]).is_err());
    assert!(TestFunction::new(2, vec![comp(vec![term(2, 0)])]).is_err());
    assert!(TestFunction::new(2, vec![comp(vec![term(9, 9)])]).is_err());
    assert!(TestFunction::new(3, vec![comp(vec![term(1, 1)])]).is_err());
    assert!(TestFunction::new(2, vec![comp(vec![term(1, 1), term(1, 1)])]).unwrap().components()[0].terms.len() == 1);
    let annulus = Component { profile: Profile::new(2.0, 1.0, 1).unwrap(), terms: vec![term(2, 0)] };
    assert!(TestFunction::new(2, vec![annulus]).is_ok());
    assert!(Profile::new(1.0, 1.0, 1).is_err());
    assert!(Profile::new(1.0, 0.0, 0).is_err());
}

#[test]
fn rms_matches_grid_average() {
    let f = sample_function();
    let quad = QuadratureSpec::gauss_circle(64);
    for (a, t, b) in [(0.3, 0.2, 1.0), (-1.0, 1.3, 0.4), (2.0, 1.9, -0.5), (0.0, 2.5, 0.0)] {
        let x = elem(a, t, b);
        let r = rms_average(&|y| f.eval(y), &x, &quad).unwrap();
        assert!((r.value - f.rms(&x)).abs() < 1e-12, "{} vs {}", r.value, f.rms(&x));
        assert!(r.error < 1e-12);
    }
}

#[test]
fn rms_monte_carlo_on_sl3() {
    let f = TestFunction::bi_invariant(3, Profile::new(2.0, 0.0, 2).unwrap(), 1.5).unwrap();
    let x = GroupElement::exp_diag(&[0.7, 0.1, -0.8]).unwrap();
    let r = rms_average(&|y| f.eval(y), &x, &QuadratureSpec::monte_carlo(200, 3)).unwrap();
    // the integrand is constant on the orbit
    assert!((r.value - 1.5 * Profile::new(2.0, 0.0, 2).unwrap().eval(0.8)).abs() < 1e-9);
}

#[test]
fn star_is_pointwise_conjugate_inverse() {
    let f = sample_function();
    let fs = star_involution(&f);
    for (a, t, b) in [(0.3, 0.2, 1.0), (-1.0, 1.3, 0.4), (2.0, 1.9, -0.5)] {
        let x = elem(a, t, b);
        let lhs = fs.eval(&x);
        let rhs = f.eval(&x.inverse()).conj();
        assert!((lhs - rhs).norm() < 1e-12, "{lhs} vs {rhs}");
        assert!((fs.rms(&x) - f.rms(&x)).abs() < 1e-12);
    }
    assert_eq!(star_involution(&fs), f);
}

#[test]
fn norm_at_rho_is_l1_norm() {
    let rs = sl2rs();
    let f = sample_function();
    let quad = QuadratureSpec::default();
    let v = lambda_norm(&rs, &f, &SpectralParam::rho_multiple(&rs, 1.0), &quad).unwrap();
    let oracle = simpson(2.0, 4000, |t| 2f64.sqrt() * (2.0 * t).sinh() * f.rms_at(t));
    assert!((v.value - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", v.value);
    assert!(!v.flagged);
}

#[test]
fn norm_decreases_towards_zero_parameter() {
    let rs = sl2rs();
    let f = sample_function();
    let quad = QuadratureSpec::default();
    let n = |s: f64| lambda_norm(&rs, &f, &SpectralParam::rho_multiple(&rs, s), &quad).unwrap().value;
    let (a, b, c) = (n(0.0), n(0.5), n(1.0));
    assert!(0.0 < a && a < b && b < c);
}

#[test]
fn bi_invariant_convolution_at_identity() {
    let f = TestFunction::bi_invariant(2, Profile::new(1.2, 0.0, 2).unwrap(), 1.0).unwrap();
    let g = TestFunction::bi_invariant(2, Profile::new(0.8, 0.0, 1).unwrap(), 2.0).unwrap();
    let oracle = simpson(0.8, 2000, |t| {
        2f64.sqrt() * (2.0 * t).sinh() * f.rms_at(t) * g.rms_at(t)
    });
    let v = convolve(&f, &g, &GroupElement::identity(2), &QuadratureSpec::monte_carlo(40_000, 5)).unwrap();
    assert!((v.value.re - oracle).abs() < 4.0 * v.sigma, "{} vs {oracle} ({})", v.value, v.sigma);
    assert_eq!(v.value.im, 0.0);

    let far = elem(0.1, 2.1, 0.3);
    let z = convolve(&f, &g, &far, &QuadratureSpec::monte_carlo(100, 5)).unwrap();
    assert_eq!(z.value, Complex64::new(0.0, 0.0));
}

#[test]
fn sl3_convolution_at_identity() {
    let rs = build_root_system("sl(3,R)").unwrap();
    let p = Profile::new(1.0, 0.0, 2).unwrap();
    let f = TestFunction::bi_invariant(3, p, 1.0).unwrap();
    let oracle: f64 = chamber_rule(&rs, 1.0, 24, 24)
        .unwrap()
        .iter()
        .map(|n| {
            let r = n.ambient.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            n.weight * p.eval(r).powi(2)
        })
        .sum();
    let v = convolve(&f, &f, &GroupElement::identity(3), &QuadratureSpec::monte_carlo(100_000, 2)).unwrap();
    assert!((v.value.re - oracle).abs() < 4.0 * v.sigma, "{} vs {oracle} ({})", v.value, v.sigma);
}

#[test]
fn convolution_with_callable_matches_test_function() {
    let f = sample_function();
    let g = TestFunction::random_sl2(&mut chunk_rng(4, 0), 4, 1.0).unwrap();
    let x = elem(0.4, 0.9, -0.2);
    let a = convolve(&f, &g, &x, &QuadratureSpec::monte_carlo(5000, 8)).unwrap();
    let b = convolve_with(&f, &|z| g.eval(z), &x, 5000, 8).unwrap();
    assert_eq!(a, b);
}

#[test]
fn submultiplicativity_small() {
    let rs = sl2rs();
    let mut rng = chunk_rng(21, 0);
    let f = TestFunction::random_sl2(&mut rng, 4, 1.0).unwrap();
    let g = sample_function();
    let rep = submultiplicativity_report(
        &rs,
        &f,
        &g,
        &SpectralParam::rho_multiple(&rs, 0.5),
        4,
        &QuadratureSpec::monte_carlo(4000, 1),
        &QuadratureSpec::default(),
    )
    .unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert!(rep.pointwise_holds(3.0), "{:?}", rep.rows);
    assert!(rep.norm_holds(3.0), "{rep:?}");

    // equality for nonnegative bi-invariant functions
    let h = TestFunction::bi_invariant(2, Profile::new(0.9, 0.0, 1).unwrap(), 1.0).unwrap();
    let rep = submultiplicativity_report(
        &rs,
        &h,
        &h,
        &SpectralParam::rho_multiple(&rs, 0.5),
        3,
        &QuadratureSpec::monte_carlo(2000, 1),
        &QuadratureSpec::default(),
    )
    .unwrap();
    for r in &rep.rows {
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.rhs.max(1.0), "{r:?}");
    }
}

#[test]
fn eigenfunction_residual_is_small() {
    let rs = sl2rs();
    let f = TestFunction::bi_invariant(2, Profile::new(1.0, 0.0, 2).unwrap(), 1.0).unwrap();
    let quad = QuadratureSpec::default();
    for lam in [
        SpectralParam::rho_multiple(&rs, 0.3),
        SpectralParam::from_dual(&rs, &[0.0], &[1.0]).unwrap(),
    ] {
        for x in [elem(0.2, 0.7, 1.1), elem(-0.9, 2.0, 0.3)] {
            let r = eigenfunction_residual(&rs, &f, &lam, &x, &quad).unwrap();
            assert!(r.value < 1e-5, "{r:?}");
        }
    }
    let e = eigenfunction_residual(&rs, &f, &SpectralParam::rho_multiple(&rs, 0.3), &GroupElement::identity(2), &quad)
        .unwrap();
    assert!(e.value < 1e-12);
}

#[test]
fn pairing_at_rho_oracle() {
    let rs = sl2rs();
    let f = sample_function();
    let v = pairing_with_phi(&rs, &f, &SpectralParam::rho_multiple(&rs, 1.0), &QuadratureSpec::default()).unwrap();
    let p = Profile::new(1.5, 0.0, 2).unwrap();
    let oracle = simpson(1.5, 2000, |t| 2f64.sqrt() * (2.0 * t).sinh() * p.eval(t));
    assert!((v.value - oracle).abs() < 1e-7 * oracle);
}
