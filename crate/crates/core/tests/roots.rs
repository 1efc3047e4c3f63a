use nalgebra::DVector;
use proptest::prelude::*;

use phibench::rootsys::{
    critical_integrability_exponent, dominant_representative, generate_weyl, in_convex_weyl_hull_brute,
    in_convex_weyl_hull_fast, is_hermitean_param, CriticalExponent, RootSystem, SpectralParam,
};

fn coords(rank: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, rank)
}

fn param(rs: &RootSystem, c: &[f64]) -> SpectralParam {
    SpectralParam::real(rs.from_dual_coords(c).unwrap())
}

fn group() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["A1", "A2", "B2"])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_hull_test_matches_brute_force(g in group(), l in coords(2), m in coords(2)) {
        let rs = RootSystem::build(g).unwrap();
        let w = generate_weyl(&rs).unwrap();
        let (l, m) = (param(&rs, &l[..rs.rank()]), param(&rs, &m[..rs.rank()]));
        prop_assert_eq!(
            in_convex_weyl_hull_fast(&rs, &w, &l, &m).unwrap(),
            in_convex_weyl_hull_brute(&w, &l, &m).unwrap()
        );
    }

    #[test]
    fn hull_contains_orbit_and_shrinks(g in group(), m in coords(2), s in 0.0..1.0f64, pick in 0usize..8) {
        let rs = RootSystem::build(g).unwrap();
        let w = generate_weyl(&rs).unwrap();
        let mu = param(&rs, &m[..rs.rank()]);
        let el = &w.elements()[pick % w.order()];
        let image = mu.apply(el);
        prop_assert!(in_convex_weyl_hull_brute(&w, &image, &mu).unwrap());
        prop_assert!(in_convex_weyl_hull_brute(&w, &mu.scaled(s), &mu).unwrap());
    }

    #[test]
    fn weyl_orbit_has_one_dominant_point(g in group(), l in coords(2)) {
        let rs = RootSystem::build(g).unwrap();
        let w = generate_weyl(&rs).unwrap();
        let lambda = param(&rs, &l[..rs.rank()]);
        let d = dominant_representative(&rs, &w, &lambda).unwrap();
        prop_assert!(d.is_dominant(&rs));
        for el in w.elements() {
            let other = dominant_representative(&rs, &w, &lambda.apply(el)).unwrap();
            prop_assert!((&other.re - &d.re).amax() < 1e-9);
        }
        // W acts by isometries
        prop_assert!((d.re.norm() - lambda.re.norm()).abs() < 1e-9);
    }

    #[test]
    fn hermitean_set_of_a2_is_the_root_lines(c in -2.0..2.0f64, off in 1e-4..1.0f64, pick in 0usize..3, sign in prop::bool::ANY) {
        let rs = RootSystem::build("A2").unwrap();
        let w = generate_weyl(&rs).unwrap();
        let a = &rs.positive_roots()[pick];
        let perp = DVector::from_vec(vec![-a[1], a[0]]);
        let off = if sign { off } else { -off };
        prop_assert!(is_hermitean_param(&w, &SpectralParam::real(a * c)));
        prop_assert!(!is_hermitean_param(&w, &SpectralParam::real(a * c + &perp * off)) || on_some_line(&rs, &(a * c + &perp * off)));
    }

    #[test]
    fn every_parameter_is_hermitean_when_minus_identity_is_in_w(g in prop::sample::select(vec!["A1", "B2"]), l in coords(2), i in coords(2)) {
        let rs = RootSystem::build(g).unwrap();
        let w = generate_weyl(&rs).unwrap();
        let r = rs.rank();
        let lambda = SpectralParam::from_dual(&rs, &[0.0; 2][..r], &i[..r]).unwrap();
        prop_assert!(is_hermitean_param(&w, &lambda));
        prop_assert!(is_hermitean_param(&w, &param(&rs, &l[..r])));
    }

    #[test]
    fn critical_exponent_of_rho_multiples(g in prop::sample::select(vec!["A1", "A2", "B2", "sl(4,R)"]), t in 0.0..0.999f64, u in 0.0..0.999f64) {
        let rs = RootSystem::build(g).unwrap();
        let q = |t: f64| critical_integrability_exponent(&rs, &SpectralParam::rho_multiple(&rs, t)).unwrap().value();
        prop_assert!((q(t) - 2.0 / (1.0 - t)).abs() <= 1e-9 * q(t));
        prop_assert!((q(t) <= q(u)) == (t <= u) || (q(t) - q(u)).abs() < 1e-9);
        prop_assert_eq!(
            critical_integrability_exponent(&rs, &SpectralParam::rho_multiple(&rs, 1.0 + t)).unwrap(),
            CriticalExponent::NoDecay
        );
    }
}

fn on_some_line(rs: &RootSystem, v: &DVector<f64>) -> bool {
    rs.positive_roots()
        .iter()
        .any(|a| (v[0] * a[1] - v[1] * a[0]).abs() <= 1e-9 * v.norm() * a.norm())
}
