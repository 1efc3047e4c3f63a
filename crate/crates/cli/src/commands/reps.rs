use std::f64::consts::TAU;

use num_complex::Complex64;

use phibench::groups::{sl2, GroupElement};
use phibench::reps::{
    kfinite_bound_report, phi_lock_residual, rep_apply, rms_coeff_bound_report, truncation_audit, FourierVector,
    RepParam,
};

use super::*;
use crate::report::{Check, Table};

const UNITARY_ANCHOR: &str = "principal-series-unitarity";
const LOCK_ANCHOR: &str = "spherical-vector-coefficient";
const KFINITE_ANCHOR: &str = "kfinite-coefficient-bound";
const RMS_BOUND_ANCHOR: &str = "rms-coefficient-bound";

/// Highest mode of the random vectors in `rep-unitarity`.
const RANDOM_MODES: usize = 8;
/// Vectors audited against a doubled truncation.
const AUDITED: usize = 5;
const AUDIT_TOL: f64 = 1e-8;
const KFINITE_MODES: [(i32, i32); 4] = [(0, 0), (0, 2), (2, 2), (0, 4)];
/// Highest mode of the random pairs in `thmB-rms`.
const RMS_MODES: usize = 4;

fn unit_random(rng: &mut rand_chacha::ChaCha8Rng, max_mode: usize, n_max: usize) -> Result<FourierVector, RunError> {
    let v = FourierVector::random(rng, max_mode, n_max)?;
    Ok(v.scaled(Complex64::new(1.0 / v.norm(), 0.0)))
}

pub fn rep_unitarity(cfg: &RunConfig) -> RunResult {
    need(cfg, "pairs", cfg.pairs)?;
    sl2_system(cfg)?;
    let p = RepParam::new(cfg.nu)?;
    let quad = cfg.quad();
    let mut t = Table::new(
        "pairs",
        UNITARY_ANCHOR,
        &["pair", "radius", "norm_defect", "inner_defect", "margin"],
    );
    let mut audit = Table::new("audit", UNITARY_ANCHOR, &["pair", "radius", "change", "margin"]);
    let (mut worst, mut worst_audit, mut flagged) = (0.0f64, 0.0f64, false);
    for i in 0..cfg.pairs {
        let mut rng = point_rng(cfg, i);
        let g = GroupElement::random(2, cfg.grid_radius, &mut rng);
        let xi = unit_random(&mut rng, RANDOM_MODES, cfg.n_max)?;
        let eta = unit_random(&mut rng, RANDOM_MODES, cfg.n_max)?;
        let a = rep_apply(&p, &g, &xi, &quad)?;
        let b = rep_apply(&p, &g, &eta, &quad)?;
        flagged |= a.flagged || b.flagged;
        let nd = (a.vector.norm() - 1.0).abs();
        let id = (a.vector.inner(&b.vector) - xi.inner(&eta)).norm();
        worst = worst.max(nd).max(id);
        t.push(vec![
            i.to_string(),
            radius_text(&g),
            num(nd),
            num(id),
            num(cfg.tolerance - nd.max(id)),
        ]);
        if i < AUDITED {
            let c = truncation_audit(&p, &g, &xi, &quad)?;
            worst_audit = worst_audit.max(c);
            audit.push(vec![i.to_string(), radius_text(&g), num(c), num(AUDIT_TOL - c)]);
        }
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "pi(g) preserves norms and inner products",
        UNITARY_ANCHOR,
        worst <= cfg.tolerance,
        flagged,
        format!("{} pairs, largest defect {}", cfg.pairs, num(worst)),
    ));
    out.check(Check::new(
        "doubling the truncation changes nothing",
        UNITARY_ANCHOR,
        worst_audit <= AUDIT_TOL,
        false,
        format!("largest change {}", num(worst_audit)),
    ));
    out.tables.push(t);
    out.tables.push(audit);
    Ok(out)
}

pub fn rep_phi_lock(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    sl2_system(cfg)?;
    let quad = cfg.quad();
    let mut nus = vec![0.0, 0.5];
    if !nus.contains(&cfg.nu) {
        nus.push(cfg.nu);
    }
    let mut t = Table::new("points", LOCK_ANCHOR, &["nu", "point", "t", "residual", "margin"]);
    let mut worst: f64 = 0.0;
    for &nu in &nus {
        let p = RepParam::new(nu)?;
        for (i, s) in linspace(0.0, cfg.grid_radius, cfg.points).into_iter().enumerate() {
            let mut rng = point_rng(cfg, i);
            let g = GroupElement::new(sl2::to_dmatrix(&sl2::kak(
                rng.random_range(0.0..TAU),
                s,
                rng.random_range(0.0..TAU),
            )))?;
            let r = phi_lock_residual(&p, &g, &quad)?;
            worst = worst.max(r);
            t.push(vec![num(nu), i.to_string(), num(s), num(r), num(cfg.tolerance - r)]);
        }
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "<pi(g) e0, e0> = phi_(i nu)(g)",
        LOCK_ANCHOR,
        worst <= cfg.tolerance,
        false,
        format!("{} values of nu, largest residual {}", nus.len(), num(worst)),
    ));
    out.tables.push(t);
    Ok(out)
}

pub fn kfinite(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    sl2_system(cfg)?;
    let p = RepParam::new(cfg.nu)?;
    let ts = linspace(0.0, cfg.grid_radius, cfg.points);
    let rep = kfinite_bound_report(&p, &KFINITE_MODES, &ts, cfg.k_grid, cfg.tolerance, &cfg.quad())?;
    let mut t = Table::new(
        "bound",
        KFINITE_ANCHOR,
        &["t", "k_index", "k2_index", "m", "n", "coeff_abs", "bound", "margin"],
    );
    for r in &rep.rows {
        t.push(vec![
            num(r.t),
            r.k_index.to_string(),
            r.k2_index.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            num(r.coeff_abs),
            num(r.bound),
            num(r.margin),
        ]);
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "|<pi(k a_t k') e_m, e_n>| <= phi_0(a_t)",
        KFINITE_ANCHOR,
        rep.holds(),
        rep.flagged,
        format!("{} coefficients, worst margin {}", rep.rows.len(), num(rep.worst_margin)),
    ));
    out.tables.push(t);
    Ok(out)
}

pub fn rms_bound(cfg: &RunConfig) -> RunResult {
    need(cfg, "pairs", cfg.pairs)?;
    need(cfg, "points", cfg.points)?;
    sl2_system(cfg)?;
    let p = RepParam::new(cfg.nu)?;
    let quad = cfg.quad();
    let ts = linspace(0.0, cfg.grid_radius, cfg.points);
    let mut t = Table::new("bound", RMS_BOUND_ANCHOR, &["pair", "t", "rms", "bound", "margin"]);
    let (mut worst, mut flagged) = (f64::INFINITY, false);
    let n_max = RMS_MODES.max(2);
    for i in 0..cfg.pairs {
        let (xi, eta) = if i == 0 {
            let one = Complex64::new(1.0, 0.0);
            (
                FourierVector::from_modes(n_max, &[(0, one), (2, one)])?,
                FourierVector::basis(0, n_max)?,
            )
        } else {
            let mut rng = func_rng(cfg, i);
            (
                FourierVector::random(&mut rng, RMS_MODES, n_max)?,
                FourierVector::random(&mut rng, RMS_MODES, n_max)?,
            )
        };
        let rep = rms_coeff_bound_report(&p, &xi, &eta, &ts, cfg.tolerance, &quad)?;
        worst = worst.min(rep.worst_margin);
        flagged |= rep.flagged;
        for r in &rep.rows {
            t.push(vec![i.to_string(), num(r.t), num(r.rms), num(r.bound), num(r.margin)]);
        }
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "A<pi(.) xi, eta> <= |xi| |eta| phi_0",
        RMS_BOUND_ANCHOR,
        worst >= 0.0,
        flagged,
        format!("{} pairs, worst margin {}", cfg.pairs, num(worst)),
    ));
    out.tables.push(t);
    Ok(out)
}
