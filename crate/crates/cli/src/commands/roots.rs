use phibench::rootsys::{
    contains_minus_identity, critical_integrability_exponent, dominant_representative, generate_weyl, in_convex_weyl_hull,
    in_convex_weyl_hull_brute, in_convex_weyl_hull_fast, is_hermitean_param, minimal_dominating_param,
    CriticalExponent, SpectralParam,
};

use super::*;
use crate::report::{Check, Table};

const HULL_ANCHOR: &str = "weyl-hull";
const WEYL_ANCHOR: &str = "weyl-combinatorics";
const HERM_ANCHOR: &str = "hermitean-parameters";
const MIN_ANCHOR: &str = "minimal-dominating-parameter";
const Q_ANCHOR: &str = "critical-exponent";

/// Random parameters in `hull` have dual coordinates in `[-HULL_RANGE, HULL_RANGE]`.
const HULL_RANGE: f64 = 1.5;

pub fn hull(cfg: &RunConfig) -> RunResult {
    let rs = cfg.root_system()?;
    let w = generate_weyl(&rs)?;
    let mut t = Table::new("pairs", HULL_ANCHOR, &["pair", "lambda", "mu", "fast", "brute", "agree"]);
    let mut members = 0;
    let mut disagree = 0;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = if cfg.pairs == 0 {
        vec![(rs.dual_coords(&cfg.lambda_param(&rs)?.re)?, rs.dual_coords(&cfg.mu_param(&rs)?.re)?)]
    } else {
        (0..cfg.pairs)
            .map(|i| {
                let mut rng = param_rng(cfg, i);
                let l = uniform_coords(&mut rng, rs.rank(), -HULL_RANGE, HULL_RANGE);
                let m = uniform_coords(&mut rng, rs.rank(), -HULL_RANGE, HULL_RANGE);
                (l, m)
            })
            .collect()
    };
    for (i, (l, m)) in pairs.iter().enumerate() {
        let lambda = SpectralParam::real(rs.from_dual_coords(l)?);
        let mu = SpectralParam::real(rs.from_dual_coords(m)?);
        let fast = in_convex_weyl_hull_fast(&rs, &w, &lambda, &mu)?;
        let brute = in_convex_weyl_hull_brute(&w, &lambda, &mu)?;
        members += fast as usize;
        disagree += (fast != brute) as usize;
        t.push(vec![
            i.to_string(),
            coords_text(l),
            coords_text(m),
            fast.to_string(),
            brute.to_string(),
            (fast == brute).to_string(),
        ]);
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        format!("fast hull test equals brute force on {}", rs.label()),
        HULL_ANCHOR,
        disagree == 0,
        false,
        format!("{} pairs, {members} members, {disagree} disagreements", pairs.len()),
    ));
    out.tables.push(t);
    Ok(out)
}

/// Known Weyl group order and `-I` membership.
fn expected_weyl(rs: &RootSystem) -> Option<(usize, bool)> {
    match rs.label() {
        "A1" => Some((2, true)),
        "A2" => Some((6, false)),
        "B2" => Some((8, true)),
        _ => rs.group_size().map(|n| ((1..=n).product(), n == 2)),
    }
}

pub fn hermitean(cfg: &RunConfig) -> RunResult {
    let rs = cfg.root_system()?;
    let mut out = Outcome::new(cfg.command);

    let mut weyl = Table::new(
        "weyl",
        WEYL_ANCHOR,
        &["group", "order", "expected_order", "minus_identity", "expected_minus_identity"],
    );
    let mut labels = vec!["A1".to_string(), "A2".to_string(), "B2".to_string()];
    if !labels.contains(&rs.label().to_string()) {
        labels.push(cfg.group.clone());
    }
    let mut all_ok = true;
    for label in &labels {
        let sys = RootSystem::build(label)?;
        let w = generate_weyl(&sys)?;
        let minus = contains_minus_identity(&w);
        let (eo, em) = expected_weyl(&sys).expect("known groups");
        all_ok &= w.order() == eo && minus == em;
        weyl.push(vec![
            sys.label().to_string(),
            w.order().to_string(),
            eo.to_string(),
            minus.to_string(),
            em.to_string(),
        ]);
    }
    out.check(Check::new(
        "Weyl group orders and -I membership",
        WEYL_ANCHOR,
        all_ok,
        false,
        format!("checked {}", labels.join(", ")),
    ));
    out.tables.push(weyl);

    // Independent description of the hermitean set: everything when -I is
    // in W, the lines through the roots for rank-two type A.
    let w = generate_weyl(&rs)?;
    let (_, has_minus) = expected_weyl(&rs).expect("known groups");
    let rank2_a = rs.rank() == 2 && !has_minus;
    if !has_minus && !rank2_a {
        out.notes.push(format!(
            "no independent description of the hermitean set of {}; classification skipped",
            rs.label()
        ));
        return Ok(out);
    }
    need(cfg, "points", cfg.points)?;
    let roots = rs.positive_roots().to_vec();
    let on_root_line = |v: &nalgebra::DVector<f64>| -> bool {
        v.norm() <= 1e-12 || roots.iter().any(|a| (v[0] * a[1] - v[1] * a[0]).abs() <= 1e-9 * v.norm() * a.norm())
    };
    let mut t = Table::new("classification", HERM_ANCHOR, &["point", "kind", "lambda", "hermitean", "expected"]);
    let mut wrong = 0;
    for i in 0..cfg.points {
        let mut rng = param_rng(cfg, i);
        let (kind, v) = match i % 3 {
            0 => {
                let a = &roots[rng.random_range(0..roots.len())];
                ("root-line", a * rng.random_range(-2.0..2.0))
            }
            1 => {
                // a root line pushed off by a small transverse amount
                let a = &roots[rng.random_range(0..roots.len())];
                let perp = nalgebra::DVector::from_vec(vec![-a[1], a[0]]);
                ("near-line", a * rng.random_range(0.2..2.0) + perp * 1e-3)
            }
            _ => ("generic", rs.from_dual_coords(&uniform_coords(&mut rng, 2, -1.5, 1.5))?),
        };
        let herm = is_hermitean_param(&w, &SpectralParam::real(v.clone()));
        let expected = has_minus || on_root_line(&v);
        wrong += (herm != expected) as usize;
        t.push(vec![
            i.to_string(),
            kind.into(),
            dual_text(&rs, &v)?,
            herm.to_string(),
            expected.to_string(),
        ]);
    }
    out.check(Check::new(
        format!("hermitean classification on {}", rs.label()),
        HERM_ANCHOR,
        wrong == 0,
        false,
        format!("{} parameters, {wrong} misclassified", cfg.points),
    ));
    out.tables.push(t);
    Ok(out)
}

/// Members per random set in `minimal-lambda`.
const SET_SIZE: usize = 3;
const LOWER_BY: f64 = 1e-3;

pub fn minimal_lambda(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    let rs = cfg.root_system()?;
    let w = generate_weyl(&rs)?;
    let mut t = Table::new(
        "sets",
        MIN_ANCHOR,
        &["set", "member", "member_lambda", "minimal_lambda", "dominated"],
    );
    let mut lower = Table::new("lowered", MIN_ANCHOR, &["set", "coordinate", "lowered_lambda", "dominant", "dominates_all"]);
    let (mut undominated, mut not_minimal) = (0, 0);
    for s in 0..cfg.points {
        let mut rng = param_rng(cfg, s);
        let members: Vec<SpectralParam> = (0..SET_SIZE)
            .map(|_| {
                let p = SpectralParam::real(rs.from_dual_coords(&uniform_coords(&mut rng, rs.rank(), -2.0, 2.0))?);
                Ok(dominant_representative(&rs, &w, &p)?)
            })
            .collect::<Result<_, RunError>>()?;
        let m = minimal_dominating_param(&rs, &members)?;
        let dominates = |top: &SpectralParam| -> Result<bool, RunError> {
            let mut all = true;
            for p in &members {
                all &= in_convex_weyl_hull(&rs, &w, p, top)?;
            }
            Ok(all)
        };
        for (j, p) in members.iter().enumerate() {
            let d = in_convex_weyl_hull(&rs, &w, p, &m)?;
            undominated += !d as usize;
            t.push(vec![
                s.to_string(),
                j.to_string(),
                dual_text(&rs, &p.re)?,
                dual_text(&rs, &m.re)?,
                d.to_string(),
            ]);
        }
        for j in 0..rs.rank() {
            let lowered = SpectralParam::real(&m.re - rs.simple_root(j) * LOWER_BY);
            let dominant = lowered.is_dominant(&rs);
            let all = dominates(&lowered)?;
            if dominant && all {
                not_minimal += 1;
            }
            lower.push(vec![
                s.to_string(),
                j.to_string(),
                dual_text(&rs, &lowered.re)?,
                dominant.to_string(),
                all.to_string(),
            ]);
        }
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "minimal parameter dominates every member",
        MIN_ANCHOR,
        undominated == 0,
        false,
        format!("{} sets of {SET_SIZE}, {undominated} members outside the hull", cfg.points),
    ));
    out.check(Check::new(
        "no dominant parameter below it dominates the set",
        MIN_ANCHOR,
        not_minimal == 0,
        false,
        format!("{not_minimal} lowered parameters still dominate"),
    ));
    out.tables.push(t);
    out.tables.push(lower);
    Ok(out)
}

pub fn critical_q(cfg: &RunConfig) -> RunResult {
    let rs = cfg.root_system()?;
    let mut t = Table::new("exponents", Q_ANCHOR, &["lambda", "q", "expected", "abs_error"]);
    let mut ts = vec![0.0, 0.25, 0.5, 2.0 / 3.0];
    if let crate::config::Coords::Rho(x) = cfg.lambda {
        if !ts.contains(&x) && (0.0..1.0).contains(&x) {
            ts.push(x);
        }
    }
    let mut worst: f64 = 0.0;
    for &x in &ts {
        let q = critical_integrability_exponent(&rs, &SpectralParam::rho_multiple(&rs, x))?.value();
        let expected = 2.0 / (1.0 - x);
        let err = (q - expected).abs();
        worst = worst.max(err / expected);
        t.push(vec![format!("rho*{x}"), num(q), num(expected), num(err)]);
    }
    let at_rho = critical_integrability_exponent(&rs, &SpectralParam::rho_multiple(&rs, 1.0))?;
    t.push(vec!["rho*1".into(), num(at_rho.value()), num(f64::INFINITY), "none".into()]);
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "q = 2/(1-t) for lambda = t rho",
        Q_ANCHOR,
        worst <= 4.0 * f64::EPSILON,
        false,
        format!("largest relative error {}", num(worst)),
    ));
    out.check(Check::new(
        "no decay at lambda = rho",
        Q_ANCHOR,
        at_rho == CriticalExponent::NoDecay,
        false,
        format!("{at_rho:?}"),
    ));
    if !matches!(cfg.lambda, crate::config::Coords::Rho(_)) {
        let l = cfg.lambda_param(&rs)?;
        let q = critical_integrability_exponent(&rs, &l)?;
        out.notes.push(format!("configured lambda: {q:?}"));
    }
    out.tables.push(t);
    Ok(out)
}
