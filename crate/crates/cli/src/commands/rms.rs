use std::f64::consts::TAU;

use num_complex::Complex64;

use phibench::groups::GroupElement;
use phibench::quadrature::{QuadratureSpec, Rule};
use phibench::rms::{
    eigenfunction_residual, lambda_norm, pairing_with_phi, rms_average, star_involution, submultiplicativity_report,
    NormValue, Profile, TestFunction,
};
use phibench::rootsys::{generate_weyl, is_hermitean_param, SpectralParam};
use phibench::spherical::phi;

use super::*;
use crate::report::{Check, Table};

const RMS_ANCHOR: &str = "rms-average";
const CONV_ANCHOR: &str = "conv-submultiplicativity";
const NORM_ANCHOR: &str = "norm-axioms";
const STAR_ANCHOR: &str = "star-invariance";
const EIGEN_ANCHOR: &str = "eigenfunction";

/// Support radius of the random test functions.
const SUPPORT: f64 = 1.5;
/// Support radius of the convolution factors.
const CONV_SUPPORT: f64 = 1.0;
/// Order of the `K x K` grid used against the closed form; exact for the
/// squared modulus of a degree-8 trigonometric polynomial.
const RMS_GRID: usize = 32;
const SIGMAS: f64 = 3.0;

fn random_function(cfg: &RunConfig, i: usize, radius: f64) -> Result<TestFunction, RunError> {
    Ok(TestFunction::random_sl2(&mut func_rng(cfg, i), phibench::rms::MAX_DEGREE, radius)?)
}

pub fn rms(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    let rs = sl2_system(cfg)?;
    let lambda = cfg.lambda_param(&rs)?;
    let phi_quad = QuadratureSpec::default();
    let grid = QuadratureSpec::gauss_circle(RMS_GRID);
    let phi_grid = QuadratureSpec::gauss_circle(8);
    let mut t = Table::new(
        "points",
        RMS_ANCHOR,
        &[
            "point",
            "radius",
            "closed_form",
            "grid",
            "grid_error",
            "invariance_deviation",
            "rms_phi",
            "phi",
            "phi_deviation",
        ],
    );
    let (mut worst_grid, mut worst_inv, mut worst_phi) = (0.0f64, 0.0f64, 0.0f64);
    let mut flagged = false;
    for i in 0..cfg.points {
        let f = random_function(cfg, i, SUPPORT)?;
        let mut rng = point_rng(cfg, i);
        let x = GroupElement::random(2, SUPPORT * 1.1, &mut rng);
        let k0 = GroupElement::rotation(rng.random_range(0.0..TAU));
        let k1 = GroupElement::rotation(rng.random_range(0.0..TAU));
        let closed = f.rms(&x);
        let g = rms_average(&|y| f.eval(y), &x, &grid)?;
        let moved = f.rms(&(&(&k0 * &x) * &k1));
        let u = |y: &GroupElement| phi(&rs, &lambda, y, &phi_quad).map_or(Complex64::new(f64::NAN, 0.0), |v| v.value);
        let a_phi = rms_average(&u, &x, &phi_grid)?;
        let phi_x = phi(&rs, &lambda, &x, &phi_quad)?;
        flagged |= g.flagged || a_phi.flagged || phi_x.flagged;
        let dg = (closed - g.value).abs();
        let di = (moved - closed).abs();
        let dp = (a_phi.value - phi_x.value.norm()).abs();
        worst_grid = worst_grid.max(dg / closed.max(1.0));
        worst_inv = worst_inv.max(di / closed.max(1.0));
        worst_phi = worst_phi.max(dp / phi_x.value.norm().max(1.0));
        t.push(vec![
            i.to_string(),
            radius_text(&x),
            num(closed),
            num(g.value),
            num(g.error),
            num(di),
            num(a_phi.value),
            num(phi_x.value.norm()),
            num(dp),
        ]);
    }
    let tol = cfg.tolerance;
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "closed form equals the K x K grid average",
        RMS_ANCHOR,
        worst_grid <= tol,
        flagged,
        format!("largest relative gap {}", num(worst_grid)),
    ));
    out.check(Check::new(
        "A u(k0 x k1) = A u(x)",
        RMS_ANCHOR,
        worst_inv <= tol,
        false,
        format!("largest relative change {}", num(worst_inv)),
    ));
    out.check(Check::new(
        "A phi_lambda = phi_lambda",
        RMS_ANCHOR,
        worst_phi <= tol,
        flagged,
        format!("largest relative gap {}", num(worst_phi)),
    ));
    out.tables.push(t);
    Ok(out)
}

pub fn conv_submult(cfg: &RunConfig) -> RunResult {
    need(cfg, "pairs", cfg.pairs)?;
    need(cfg, "points", cfg.points)?;
    let rs = sl2_system(cfg)?;
    let lambda = cfg.lambda_param(&rs)?;
    let Rule::MonteCarlo { samples, seed } = cfg.quad().rule else {
        return Err(ConfigError::BadValue {
            key: "rule".into(),
            value: format!("{:?}", cfg.rule),
            reason: "convolution needs monte-carlo".into(),
        }
        .into());
    };
    let mut points = Table::new(
        "points",
        CONV_ANCHOR,
        &["pair", "point", "radius", "lhs", "rhs", "sigma", "margin"],
    );
    let mut norms = Table::new(
        "norms",
        CONV_ANCHOR,
        &["pair", "conv_norm", "conv_norm_sigma", "product_norm", "product_norm_error", "margin"],
    );
    let (mut bad_points, mut bad_norms, mut flagged) = (0, 0, false);
    let mut worst_margin = f64::INFINITY;
    for p in 0..cfg.pairs {
        // the first pair is nonnegative and bi-invariant, where equality holds
        let (f, g) = if p == 0 {
            (
                TestFunction::bi_invariant(2, Profile::new(CONV_SUPPORT, 0.0, 2)?, 1.0)?,
                TestFunction::bi_invariant(2, Profile::new(0.7 * CONV_SUPPORT, 0.0, 1)?, 1.5)?,
            )
        } else {
            (
                random_function(cfg, 2 * p, CONV_SUPPORT)?,
                random_function(cfg, 2 * p + 1, CONV_SUPPORT)?,
            )
        };
        let mc = QuadratureSpec {
            rule: Rule::MonteCarlo {
                samples,
                seed: seed.wrapping_add(p as u64),
            },
            ..cfg.quad()
        };
        let rep = submultiplicativity_report(&rs, &f, &g, &lambda, cfg.points, &mc, &QuadratureSpec::default())?;
        flagged |= rep.flagged;
        for (i, r) in rep.rows.iter().enumerate() {
            let margin = r.rhs + SIGMAS * r.sigma + 1e-12 * r.rhs.abs() - r.lhs;
            worst_margin = worst_margin.min(margin);
            bad_points += !r.holds(SIGMAS) as usize;
            points.push(vec![
                p.to_string(),
                i.to_string(),
                num(r.radius),
                num(r.lhs),
                num(r.rhs),
                num(r.sigma),
                num(margin),
            ]);
        }
        bad_norms += !rep.norm_holds(SIGMAS) as usize;
        norms.push(vec![
            p.to_string(),
            num(rep.conv_norm),
            num(rep.conv_norm_sigma),
            num(rep.product_norm),
            num(rep.product_norm_error),
            num(rep.product_norm + rep.product_norm_error + SIGMAS * rep.conv_norm_sigma - rep.conv_norm),
        ]);
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "A(f*g) <= Af * Ag within 3 sigma",
        CONV_ANCHOR,
        bad_points == 0,
        flagged,
        format!(
            "{} pairs x {} points, {bad_points} violations, worst margin {}",
            cfg.pairs,
            cfg.points,
            num(worst_margin)
        ),
    ));
    out.check(Check::new(
        "||f*g|| <= ||f|| ||g|| within 3 sigma",
        CONV_ANCHOR,
        bad_norms == 0,
        flagged,
        format!("{} pairs, {bad_norms} violations", cfg.pairs),
    ));
    out.tables.push(points);
    out.tables.push(norms);
    Ok(out)
}

/// Accumulates rows of `(item, property, lhs, rhs, margin)` and a verdict
/// per property.
struct PropertyTable {
    table: Table,
    properties: Vec<(&'static str, usize, usize, bool)>,
}

impl PropertyTable {
    fn new(anchor: &'static str) -> Self {
        PropertyTable {
            table: Table::new("properties", anchor, &["item", "property", "lhs", "rhs", "margin"]),
            properties: Vec::new(),
        }
    }

    /// Records `lhs <= rhs` (the margin is `rhs - lhs`).
    fn push(&mut self, item: usize, property: &'static str, lhs: f64, rhs: f64, flagged: bool) {
        let margin = rhs - lhs;
        self.table
            .push(vec![item.to_string(), property.into(), num(lhs), num(rhs), num(margin)]);
        let idx = match self.properties.iter().position(|p| p.0 == property) {
            Some(i) => i,
            None => {
                self.properties.push((property, 0, 0, false));
                self.properties.len() - 1
            }
        };
        let p = &mut self.properties[idx];
        p.1 += 1;
        p.2 += !(margin >= 0.0) as usize;
        p.3 |= flagged;
    }

    fn finish(self, out: &mut Outcome, anchor: &'static str) {
        for (name, n, bad, flagged) in &self.properties {
            out.check(Check::new(*name, anchor, *bad == 0, *flagged, format!("{n} cases, {bad} violations")));
        }
        out.tables.push(self.table);
    }
}

fn norm(rs: &RootSystem, f: &TestFunction, l: &SpectralParam, q: &QuadratureSpec) -> Result<NormValue, RunError> {
    Ok(lambda_norm(rs, f, l, q)?)
}

pub fn norm_lambda(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    let rs = sl2_system(cfg)?;
    let lambda = cfg.lambda_param(&rs)?;
    lambda.require_real()?;
    let zero = SpectralParam::zero(rs.rank());
    let quad = cfg.quad();
    let tol = cfg.tolerance;
    let mut props = PropertyTable::new(NORM_ANCHOR);
    for i in 0..cfg.points {
        let f = random_function(cfg, 2 * i, SUPPORT)?;
        let g = random_function(cfg, 2 * i + 1, SUPPORT)?;
        let mut rng = point_rng(cfg, i);
        let c = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let big_c = rng.random_range(0.5..2.0);
        let nf = norm(&rs, &f, &lambda, &quad)?;
        let ng = norm(&rs, &g, &lambda, &quad)?;
        let nsum = norm(&rs, &f.add(&g)?, &lambda, &quad)?;
        let nc = norm(&rs, &f.scaled(c), &lambda, &quad)?;
        let n0 = norm(&rs, &f, &zero, &quad)?;
        let pair = pairing_with_phi(&rs, &f, &lambda, &quad)?;
        let scale = |v: f64| tol * v.abs().max(1.0);
        props.push(i, "triangle inequality", nsum.value, nf.value + ng.value + scale(nsum.value), nsum.flagged || nf.flagged || ng.flagged);
        let target = c.norm() * nf.value;
        props.push(i, "homogeneity", (nc.value - target).abs(), scale(target), nc.flagged || nf.flagged);
        props.push(i, "positivity", -nf.value, 0.0, nf.flagged);
        props.push(i, "norm at 0 below norm at lambda", n0.value, nf.value + scale(nf.value), n0.flagged || nf.flagged);
        props.push(
            i,
            "duality pairing",
            (big_c * pair.value).abs(),
            big_c * nf.value + scale(big_c * nf.value),
            pair.flagged || nf.flagged,
        );
    }
    // equality in the pairing for a nonnegative bi-invariant function
    let h = TestFunction::bi_invariant(2, Profile::new(1.2, 0.0, 2)?, 1.0)?;
    let nh = norm(&rs, &h, &lambda, &quad)?;
    let ph = pairing_with_phi(&rs, &h, &lambda, &quad)?;
    props.push(
        cfg.points,
        "pairing equals norm for nonnegative bi-invariant f",
        (ph.value - nh.value).abs(),
        tol * nh.value.max(1.0),
        nh.flagged || ph.flagged,
    );
    let mut out = Outcome::new(cfg.command);
    props.finish(&mut out, NORM_ANCHOR);
    Ok(out)
}

pub fn star_norm(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    need(cfg, "pairs", cfg.pairs)?;
    let rs = sl2_system(cfg)?;
    let lambda = cfg.lambda_param(&rs)?;
    let w = generate_weyl(&rs)?;
    let hermitean = is_hermitean_param(&w, &lambda);
    let quad = cfg.quad();
    let mut props = PropertyTable::new(STAR_ANCHOR);
    let mut out = Outcome::new(cfg.command);
    if hermitean {
        for i in 0..cfg.pairs {
            let f = random_function(cfg, i, SUPPORT)?;
            let a = norm(&rs, &f, &lambda, &quad)?;
            let b = norm(&rs, &star_involution(&f), &lambda, &quad)?;
            props.push(i, "||f*|| = ||f||", (a.value - b.value).abs(), cfg.tolerance * a.value.max(1.0), a.flagged || b.flagged);
        }
    } else {
        out.notes.push("lambda is not hermitean; ||f*|| = ||f|| is not asserted".into());
    }
    let f = random_function(cfg, cfg.pairs, SUPPORT)?;
    let fs = star_involution(&f);
    let fss = star_involution(&fs);
    for i in 0..cfg.points {
        let mut rng = point_rng(cfg, i);
        let x = GroupElement::random(2, SUPPORT * 1.1, &mut rng);
        let scale = f.eval(&x).norm().max(1.0);
        props.push(i, "(f*)* = f", (fss.eval(&x) - f.eval(&x)).norm(), 1e-12 * scale, false);
        props.push(i, "f*(x) = conj f(x^-1)", (fs.eval(&x) - f.eval(&x.inverse()).conj()).norm(), 1e-12 * scale, false);
    }
    let real = TestFunction::bi_invariant(2, Profile::new(1.3, 0.0, 2)?, 0.8)?;
    let same = star_involution(&real) == real;
    props.push(0, "f* = f for real bi-invariant f", !same as u8 as f64, 0.0, false);
    props.finish(&mut out, STAR_ANCHOR);
    Ok(out)
}

pub fn eigenfunction(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    let rs = sl2_system(cfg)?;
    let quad = cfg.quad();
    let bumps = [
        TestFunction::bi_invariant(2, Profile::new(1.0, 0.0, 2)?, 1.0)?,
        TestFunction::bi_invariant(2, Profile::new(1.5, 0.0, 1)?, 0.7)?,
        TestFunction::bi_invariant(2, Profile::new(1.2, 0.6, 3)?, 1.3)?,
    ];
    let params = [
        ("0".to_string(), SpectralParam::zero(rs.rank())),
        (cfg.lambda.to_string(), cfg.lambda_param(&rs)?),
        ("rho".to_string(), SpectralParam::rho_multiple(&rs, 1.0)),
    ];
    let mut t = Table::new(
        "residuals",
        EIGEN_ANCHOR,
        &["bump", "lambda", "point", "radius", "residual", "error", "margin"],
    );
    let mut worst = vec![0.0f64; params.len()];
    let mut flagged = vec![false; params.len()];
    let points: Vec<GroupElement> = (0..cfg.points)
        .map(|i| GroupElement::random(2, cfg.grid_radius, &mut point_rng(cfg, i)))
        .collect();
    for (b, f) in bumps.iter().enumerate() {
        for (j, (label, l)) in params.iter().enumerate() {
            for (i, x) in points.iter().enumerate() {
                let r = eigenfunction_residual(&rs, f, l, x, &quad)?;
                worst[j] = worst[j].max(r.value);
                flagged[j] |= r.flagged;
                t.push(vec![
                    b.to_string(),
                    label.clone(),
                    i.to_string(),
                    radius_text(x),
                    num(r.value),
                    num(r.quad_error),
                    num(cfg.tolerance - r.value),
                ]);
            }
        }
    }
    let mut out = Outcome::new(cfg.command);
    for (j, (label, _)) in params.iter().enumerate() {
        out.check(Check::new(
            format!("f * phi = (f * phi)(e) phi, lambda = {label}"),
            EIGEN_ANCHOR,
            worst[j] < cfg.tolerance,
            flagged[j],
            format!("max residual {} over {} bumps x {} points", num(worst[j]), bumps.len(), cfg.points),
        ));
    }
    out.tables.push(t);
    Ok(out)
}
