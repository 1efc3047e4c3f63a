use super::*;
use crate::quadrature::{chunk_rng, gauss_legendre_on};

fn elem(a: f64, t: f64, b: f64) -> GroupElement {
    GroupElement::new(sl2::to_dmatrix(&sl2::kak(a, t, b))).unwrap()
}

#[test]
fn calibration_picks_the_unitary_sign() {
    let cal = rep_calibration().as_ref().unwrap();
    assert_eq!(cal.sign, 1.0);
    assert!(cal.unitarity_defects[0] < 1e-9);
    assert!(cal.unitarity_defects[1] > 0.1);
    assert!(cal.lock_residual < 1e-6);
}

#[test]
fn fourier_vector_basics() {
    assert!(FourierVector::new(3).is_err());
    assert!(FourierVector::basis(1, 4).is_err());
    assert!(FourierVector::basis(6, 4).is_err());
    let v = FourierVector::from_modes(4, &[(-2, Complex64::new(1.0, 1.0)), (4, Complex64::new(0.0, 2.0))]).unwrap();
    assert_eq!(v.top_mode(), 4);
    assert!((v.norm() - 6f64.sqrt()).abs() < 1e-15);
    let th = 0.37;
    let direct = Complex64::new(1.0, 1.0) * Complex64::from_polar(1.0, -2.0 * th)
        + Complex64::new(0.0, 2.0) * Complex64::from_polar(1.0, 4.0 * th);
    assert!((v.eval(th) - direct).norm() < 1e-14);
    assert_eq!(v.truncated(8).unwrap().truncated(4).unwrap(), v);
    assert!((v.inner(&v).re - 6.0).abs() < 1e-14);
}

#[test]
fn identity_and_rotations() {
    let p = RepParam::new(0.8).unwrap();
    let quad = default_quad();
    let xi = FourierVector::random(&mut chunk_rng(3, 0), 6, 8).unwrap();
    let r = rep_apply(&p, &GroupElement::identity(2), &xi, &quad).unwrap();
    for (n, c) in xi.modes() {
        assert!((r.vector.coeff(n) - c).norm() < 1e-12);
    }
    // (pi(R(a)) f)(th) = f(th - a), so mode n picks up exp(-i n a)
    let a = 0.9;
    let r = rep_apply(&p, &elem(a, 0.0, 0.0), &xi, &quad).unwrap();
    for (n, c) in xi.modes() {
        let expected = c * Complex64::from_polar(1.0, -(n as f64) * a);
        assert!((r.vector.coeff(n) - expected).norm() < 1e-12);
    }
    assert!((r.vector.norm() - xi.norm()).abs() < 1e-12);
}

#[test]
fn unitary_on_a_1() {
    let p = RepParam::new(1.0).unwrap();
    let e0 = FourierVector::basis(0, DEFAULT_N_MAX).unwrap();
    let g = elem(0.0, 1.0, 0.0);
    let r = rep_apply(&p, &g, &e0, &default_quad()).unwrap();
    assert!((r.vector.norm() - 1.0).abs() < 1e-6, "{}", r.vector.norm());
    assert!((r.full_norm - 1.0).abs() < 1e-10);
    assert!(!r.flagged, "{r:?}");
}

#[test]
fn homomorphism_identity() {
    let p = RepParam::new(0.4).unwrap();
    let mut rng = chunk_rng(17, 0);
    let quad = default_quad();
    for _ in 0..3 {
        let g = GroupElement::random(2, 0.6, &mut rng);
        let h = GroupElement::random(2, 0.6, &mut rng);
        let xi = FourierVector::random(&mut rng, 4, DEFAULT_N_MAX).unwrap();
        let eta = FourierVector::random(&mut rng, 4, DEFAULT_N_MAX).unwrap();
        let d = homomorphism_defect(&p, &g, &h, &xi, &eta, &quad).unwrap();
        assert!(d < 1e-6 * xi.norm() * eta.norm(), "{d}");
    }
}

#[test]
fn spherical_vector_gives_phi() {
    let quad = default_quad();
    for nu in [0.0, 0.5, 1.0] {
        let p = RepParam::new(nu).unwrap();
        for g in [elem(0.1, 0.3, 0.2), elem(-1.0, 2.5, 0.4)] {
            assert!(phi_lock_residual(&p, &g, &quad).unwrap() < 1e-6);
        }
    }
}

#[test]
fn truncation_audit_is_tiny_near_identity() {
    let p = RepParam::new(0.3).unwrap();
    let xi = FourierVector::basis(2, DEFAULT_N_MAX).unwrap();
    let a = truncation_audit(&p, &elem(0.2, 0.5, 1.0), &xi, &default_quad()).unwrap();
    assert!(a < 1e-8, "{a}");
}

#[test]
fn rms_of_coefficient_matches_double_quadrature() {
    let p = RepParam::new(0.6).unwrap();
    let e0 = FourierVector::basis(0, 4).unwrap();
    let e2 = FourierVector::basis(2, 4).unwrap();
    let quad = default_quad();
    let u = |y: &GroupElement| matrix_coefficient(&p, y, &e0, &e2, &quad).unwrap().value;
    let nodes = gauss_legendre_on(20, 0.0, TAU);
    let mut rng = chunk_rng(5, 0);
    for _ in 0..3 {
        let x = GroupElement::random(2, 1.5, &mut rng);
        let xm = sl2::from_dmatrix(x.matrix());
        let mut acc = 0.0;
        for &(a, wa) in &nodes {
            for &(b, wb) in &nodes {
                let y = GroupElement::new(sl2::to_dmatrix(&(sl2::rot(a) * xm * sl2::rot(b)))).unwrap();
                acc += wa * wb * u(&y).norm_sqr();
            }
        }
        let oracle = (acc / (TAU * TAU)).sqrt();
        let r = rms_average(&u, &x, &QuadratureSpec::gauss_circle(8)).unwrap();
        assert!((r.value - oracle).abs() < 1e-6, "{} vs {oracle}", r.value);
    }
}

#[test]
fn kfinite_bound_small_grid() {
    let p = RepParam::new(1.0).unwrap();
    let rep = kfinite_bound_report(&p, &[(0, 0), (0, 2)], &[0.0, 1.0, 3.0], 4, 1e-6, &default_quad()).unwrap();
    assert_eq!(rep.rows.len(), 3 * 16 * 2);
    assert!(rep.holds(), "{}", rep.worst_margin);
    let eq = rep.rows.iter().find(|r| r.t == 0.0 && r.m == 0 && r.n == 0).unwrap();
    assert!((eq.coeff_abs - 1.0).abs() < 1e-12);
}

#[test]
fn rms_bound_scales_linearly() {
    let p = RepParam::new(0.7).unwrap();
    let xi = FourierVector::from_modes(4, &[(0, Complex64::new(1.0, 0.0)), (2, Complex64::new(1.0, 0.0))]).unwrap();
    let eta = FourierVector::basis(0, 4).unwrap();
    let ts = [0.0, 1.0, 2.5];
    let a = rms_coeff_bound_report(&p, &xi, &eta, &ts, 1e-6, &default_quad()).unwrap();
    assert!(a.holds());
    let b = rms_coeff_bound_report(&p, &xi.scaled(Complex64::new(3.0, 0.0)), &eta, &ts, 0.0, &default_quad()).unwrap();
    for (r, s) in a.rows.iter().zip(&b.rows) {
        assert!((s.rms - 3.0 * r.rms).abs() < 1e-12 * s.rms.max(1.0));
        assert!((s.bound - 3.0 * r.bound).abs() < 1e-12 * s.bound.max(1.0));
    }
}
