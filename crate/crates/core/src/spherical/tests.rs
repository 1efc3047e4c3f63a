use super::*;
use crate::groups::GroupElement;
use crate::quadrature::chunk_rng;
use crate::rootsys::{build_root_system, generate_weyl};

/// `P_{z - 1/2}(cosh r)` from the Mehler integral
/// `(sqrt 2 / pi) int_0^r cosh(z s) / sqrt(cosh r - cosh s) ds`,
/// after `s = r - w^2`, by composite Simpson.
fn mehler(z: Complex64, r: f64) -> Complex64 {
    let m = 200_000;
    let top = r.sqrt();
    let h = top / m as f64;
    let f = |w: f64| -> Complex64 {
        let s = r - w * w;
        let denom = if w == 0.0 {
            (r.sinh() * 1.0).sqrt()
        } else {
            (2.0 * ((2.0 * r - w * w) / 2.0).sinh() * (w * w / 2.0).sinh()).sqrt() / w
        };
        (z * s).cosh() * (2.0 / denom)
    };
    let mut acc = f(0.0) + f(top);
    for i in 1..m {
        let c = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(i as f64 * h) * c;
    }
    acc * (h / 3.0) * (2f64.sqrt() / std::f64::consts::PI)
}

fn sl2() -> RootSystem {
    build_root_system("sl(2,R)").unwrap()
}

fn a_t(t: f64) -> GroupElement {
    GroupElement::exp_diag(&[t, -t]).unwrap()
}

#[test]
fn calibration_picks_a_weyl_invariant_convention() {
    let report = calibration_report().as_ref().unwrap();
    let literal = &report.outcomes[0];
    assert_eq!(literal.convention, Convention::LITERAL);
    assert!(literal.rho_is_one);
    assert!(!literal.weyl_invariant);
    assert_eq!(
        report.chosen,
        Some(Convention {
            lambda_sign: -1,
            rho_sign: -1,
            inverse: true
        })
    );
}

#[test]
fn literal_formula_is_a_shifted_parameter() {
    // exp((rho - lambda) H) = exp(-((lambda - 2 rho) + rho) H)
    let rs = sl2();
    let x = GroupElement::new(sl2::to_dmatrix(&sl2::kak(0.2, 1.7, -0.4))).unwrap();
    let quad = QuadratureSpec::default();
    let lam = SpectralParam::rho_multiple(&rs, 0.3);
    let shifted = SpectralParam::real(&lam.re - rs.rho() * 2.0);
    let lit = KIntegrator::with_convention(&rs, &x, &quad, Convention::LITERAL).unwrap().eval(&lam);
    let cal = KIntegrator::new(&rs, &x, &quad).unwrap().eval(&shifted);
    assert!((lit.value - cal.value).norm() < 1e-13 * cal.value.norm());
}

#[test]
fn identity_and_rho() {
    let rs = sl2();
    let quad = QuadratureSpec::default();
    for z in [0.0, 0.37, 2.0] {
        let lam = SpectralParam::from_dual(&rs, &[z], &[0.4]).unwrap();
        let v = phi(&rs, &lam, &GroupElement::identity(2), &quad).unwrap();
        assert!((v.value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
    let rho = SpectralParam::rho_multiple(&rs, 1.0);
    for i in 0..=50 {
        let t = 0.1 * i as f64;
        let v = phi(&rs, &rho, &a_t(t), &quad).unwrap();
        assert!((v.value.re - 1.0).abs() < 1e-6, "t={t}: {}", v.value.re);
        assert!(!v.flagged);
    }
}

#[test]
fn rank_one_matches_mehler_integral() {
    let rs = sl2();
    let quad = QuadratureSpec::default();
    for (re, im) in [(0.0, 0.0), (0.2, 0.0), (0.0, 1.0), (0.3, 0.7)] {
        let lam = SpectralParam::from_dual(&rs, &[re], &[im]).unwrap();
        for t in [0.05, 0.5, 1.5, 3.0, 6.0] {
            let v = phi(&rs, &lam, &a_t(t), &quad).unwrap();
            let oracle = mehler(Complex64::new(re, im), 2.0 * t);
            assert!(
                (v.value - oracle).norm() < 1e-6,
                "z={re}+{im}i t={t}: {} vs {}",
                v.value,
                oracle
            );
        }
    }
}

#[test]
fn sl3_monte_carlo_rho_and_identity() {
    let rs = build_root_system("sl(3,R)").unwrap();
    let quad = QuadratureSpec::monte_carlo(20_000, 9);
    let rho = SpectralParam::rho_multiple(&rs, 1.0);
    let mut rng = chunk_rng(8, 0);
    let x = GroupElement::random(3, 2.0, &mut rng);
    let v = phi(&rs, &rho, &x, &quad).unwrap();
    assert!((v.value.re - 1.0).abs() < 4.0 * v.quad_error, "{v:?}");
    let lam = SpectralParam::rho_multiple(&rs, 0.5);
    let v = phi(&rs, &lam, &x, &quad).unwrap();
    assert!(v.value.re > 0.0 && v.value.re < 1.0 + 3.0 * v.quad_error);
}

#[test]
fn functional_equation_small_sample() {
    let rs = sl2();
    let quad = QuadratureSpec::default();
    let lams = [
        SpectralParam::zero(1),
        SpectralParam::rho_multiple(&rs, 0.4),
        SpectralParam::from_dual(&rs, &[0.0], &[1.0]).unwrap(),
    ];
    let mut rng = chunk_rng(12, 0);
    for _ in 0..3 {
        let x = GroupElement::random(2, 3.0, &mut rng);
        let y = GroupElement::random(2, 3.0, &mut rng);
        for r in functional_equation_residuals(&rs, &lams, &x, &y, &quad).unwrap() {
            assert!(r.value < 1e-5, "{r:?}");
        }
    }
    let e = GroupElement::identity(2);
    let x = GroupElement::random(2, 2.0, &mut rng);
    let r = functional_equation_residual(&rs, &lams[1], &e, &x, &quad).unwrap();
    assert!(r.value < 1e-10);
}

#[test]
fn envelope_examples() {
    let rs = sl2();
    for t in [0.0, 0.7, 3.0] {
        let h = rs.to_frame(&[t, -t]);
        let v = npp_envelope(&rs, &SpectralParam::zero(1), &h).unwrap();
        assert!((v - (1.0 + 2.0 * t) * (-t).exp()).abs() < 1e-14);
        let lam = SpectralParam::rho_multiple(&rs, 0.5);
        let v = npp_envelope(&rs, &lam, &h).unwrap();
        assert!((v - (-0.5 * t).exp()).abs() < 1e-14);
    }
    let rs3 = build_root_system("sl(3,R)").unwrap();
    let h = rs3.to_frame(&[1.0, 0.25, -1.25]);
    let v = npp_envelope(&rs3, &SpectralParam::zero(2), &h).unwrap();
    let expected = (1.75) * (3.25) * (2.5) * (-rs3.pair(rs3.rho(), &h)).exp();
    assert!((v - expected).abs() < 1e-13);
    assert!(matches!(
        npp_envelope(&rs, &SpectralParam::rho_multiple(&rs, -0.5), &rs.to_frame(&[1.0, -1.0])),
        Err(Error::NotDominant { .. })
    ));
}

#[test]
fn npp_scan_band_is_finite_and_positive() {
    let rs = sl2();
    let quad = QuadratureSpec::default();
    let spec = GridSpec {
        radii: 20,
        ..GridSpec::default()
    };
    let grid = chamber_grid(&rs, &spec).unwrap();
    for lam in [SpectralParam::zero(1), SpectralParam::rho_multiple(&rs, 0.5)] {
        let scan = npp_ratio_scan(&rs, &lam, &grid, &quad).unwrap();
        assert!((scan.rows[0].ratio - 1.0).abs() < 1e-12);
        assert!(scan.min_ratio > 0.0 && scan.max_ratio.is_finite());
        assert!(scan.skipped.is_empty());
    }
}

#[test]
fn grid_has_requested_radii() {
    let rs = build_root_system("sl(3,R)").unwrap();
    let spec = GridSpec::default();
    let grid = chamber_grid(&rs, &spec).unwrap();
    assert_eq!(grid.len(), 1 + (3 + 2) * spec.radii);
    for h in &grid {
        assert!(rs.in_closed_chamber(h, 1e-12));
        assert!(radius_of(&rs, h) <= spec.radius + 1e-12);
    }
    assert!((radius_of(&rs, grid.last().unwrap()) - 6.0).abs() < 1e-12);
}

#[test]
fn comparison_examples() {
    let rs = sl2();
    let w = generate_weyl(&rs).unwrap();
    let quad = QuadratureSpec::default();
    let grid = chamber_grid(&rs, &GridSpec::default()).unwrap();
    let rep = compare_on_grid(
        &rs,
        &w,
        &SpectralParam::rho_multiple(&rs, 0.3),
        &SpectralParam::rho_multiple(&rs, 1.0),
        &grid,
        &quad,
    )
    .unwrap();
    assert!(rep.hull_member && rep.violations.is_empty() && rep.consistent);

    let rep = compare_on_grid(
        &rs,
        &w,
        &SpectralParam::rho_multiple(&rs, 1.0),
        &SpectralParam::rho_multiple(&rs, 0.5),
        &grid,
        &quad,
    )
    .unwrap();
    assert!(!rep.hull_member && !rep.violations.is_empty() && rep.decisive);

    let same = SpectralParam::rho_multiple(&rs, 0.7);
    let rep = compare_on_grid(&rs, &w, &same, &same, &grid, &quad).unwrap();
    assert!(rep.violations.is_empty());
}

#[test]
fn rejects_mismatched_inputs() {
    let rs = sl2();
    let quad = QuadratureSpec::default();
    let lam = SpectralParam::zero(2);
    assert!(phi(&rs, &lam, &a_t(1.0), &quad).is_err());
    let rs3 = build_root_system("sl(3,R)").unwrap();
    let x = GroupElement::identity(3);
    assert!(matches!(
        phi(&rs3, &SpectralParam::zero(2), &x, &quad),
        Err(Error::Unsupported { .. })
    ));
}
