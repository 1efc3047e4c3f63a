use std::path::Path;

use nalgebra::DVector;

use phibench::groups::{radius_of, GroupElement};
use phibench::rootsys::{generate_weyl, SpectralParam};
use phibench::spherical::{
    chamber_grid, compare_on_grid, compare_on_prepared, functional_equation_residuals, grid_rays, npp_ratio_scan,
    phi_at, PreparedGrid,
};

use super::*;
use crate::cache::{self, CacheHeader, CachePoint};
use crate::config::Coords;
use crate::report::{Check, Table};

const PHI_ANCHOR: &str = "spherical-integral";
const RHO_ANCHOR: &str = "phi-rho-constant";
const FE_ANCHOR: &str = "functional-equation";
const NPP_ANCHOR: &str = "npp-envelope";
const CMP_ANCHOR: &str = "hull-comparison";

/// Ratio checked against 1 near the origin.
const NEAR_ORIGIN: f64 = 1e-6;
const ORIGIN_RATIO_TOL: f64 = 1e-3;

fn h_cells(h: &DVector<f64>) -> impl Iterator<Item = String> + '_ {
    h.iter().map(|x| num(*x))
}

pub fn phi_eval(cfg: &RunConfig, cache_dir: &Path) -> RunResult {
    let rs = group_system(cfg)?;
    let lambda = cfg.lambda_param(&rs)?;
    let quad = cfg.quad();
    let grid = chamber_grid(&rs, &cfg.grid())?;
    let compute = || -> Result<Vec<CachePoint>, RunError> {
        grid.iter()
            .map(|h| {
                let v = phi_at(&rs, &lambda, h, &quad)?;
                Ok(CachePoint {
                    h: h.iter().copied().collect(),
                    re: v.value.re,
                    im: v.value.im,
                    error: v.quad_error,
                })
            })
            .collect()
    };
    let mut out = Outcome::new(cfg.command);
    let points = if cfg.cache {
        let header = CacheHeader {
            group: rs.label().to_string(),
            lambda: format!("{};{}", cfg.lambda, cfg.lambda_im),
            quad: format!("{};grid={:?}", quad.fingerprint(), cfg.grid()),
            code: cache::code_fingerprint(),
        };
        let path = cache_dir.join(cache::file_name(&header));
        let (entry, status) = cache::load_or_compute(&path, &header, compute)?;
        out.notes.push(format!("cache {}: {status:?}", path.display()));
        entry.payload
    } else {
        compute()?
    };

    let mut t = Table::with_coords("phi", PHI_ANCHOR, &["point", "radius", "re", "im", "error", "flagged"], 1, rs.rank());
    let mut flagged = 0;
    let mut finite = true;
    for (i, p) in points.iter().enumerate() {
        let h = DVector::from_vec(p.h.clone());
        let f = quad.is_flagged(p.re.hypot(p.im), p.error);
        flagged += f as usize;
        finite &= p.re.is_finite() && p.im.is_finite();
        let mut row = vec![i.to_string()];
        row.extend(h_cells(&h));
        row.extend([num(radius_of(&rs, &h)), num(p.re), num(p.im), num(p.error), f.to_string()]);
        t.push(row);
    }
    out.check(Check::new(
        "phi values finite",
        PHI_ANCHOR,
        finite,
        flagged > 0,
        format!("{} points, {flagged} over the error budget", points.len()),
    ));
    out.tables.push(t);
    Ok(out)
}

pub fn phi_const_rho(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    let rs = group_system(cfg)?;
    let rho = SpectralParam::rho_multiple(&rs, 1.0);
    let quad = cfg.quad();
    let mut t = Table::with_coords(
        "points",
        RHO_ANCHOR,
        &["point", "ray", "radius", "phi", "deviation", "error"],
        3,
        rs.rank(),
    );
    let mut worst: f64 = 0.0;
    let mut flagged = false;
    let mut i = 0;
    for (ray, u) in grid_rays(&rs, &cfg.grid())?.iter().enumerate() {
        let c = radius_of(&rs, u);
        for r in linspace(0.0, cfg.grid_radius, cfg.points) {
            let h = u * (r / c);
            let v = phi_at(&rs, &rho, &h, &quad)?;
            let dev = (v.value - 1.0).norm();
            worst = worst.max(dev);
            flagged |= v.flagged;
            let mut row = vec![i.to_string(), ray.to_string(), num(r)];
            row.extend(h_cells(&h));
            row.extend([num(v.value.re), num(dev), num(v.quad_error)]);
            t.push(row);
            i += 1;
        }
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "max |phi_rho - 1| below tolerance",
        RHO_ANCHOR,
        worst < cfg.tolerance,
        flagged,
        format!("max deviation {} over {i} points, tolerance {}", num(worst), num(cfg.tolerance)),
    ));
    out.tables.push(t);
    Ok(out)
}

pub fn functional_eq(cfg: &RunConfig) -> RunResult {
    need(cfg, "points", cfg.points)?;
    let rs = group_system(cfg)?;
    let n = rs.group_size().expect("group system");
    let quad = cfg.quad();
    let nu_dual = vec![cfg.nu; rs.rank()];
    let params = [
        ("0".to_string(), SpectralParam::zero(rs.rank())),
        (lambda_label(cfg), cfg.lambda_param(&rs)?),
        (format!("i*{}", cfg.nu), SpectralParam::from_dual(&rs, &vec![0.0; rs.rank()], &nu_dual)?),
    ];
    let lambdas: Vec<SpectralParam> = params.iter().map(|p| p.1.clone()).collect();
    let mut t = Table::new(
        "residuals",
        FE_ANCHOR,
        &["pair", "lambda", "x_radius", "y_radius", "residual", "error", "margin"],
    );
    let mut worst = vec![0.0f64; params.len()];
    let mut flagged = vec![false; params.len()];
    for i in 0..cfg.points {
        let mut rng = point_rng(cfg, i);
        let x = GroupElement::random(n, cfg.grid_radius, &mut rng);
        let y = GroupElement::random(n, cfg.grid_radius, &mut rng);
        let res = functional_equation_residuals(&rs, &lambdas, &x, &y, &quad)?;
        for (j, r) in res.iter().enumerate() {
            worst[j] = worst[j].max(r.value);
            flagged[j] |= r.flagged;
            t.push(vec![
                i.to_string(),
                params[j].0.clone(),
                radius_text(&x),
                radius_text(&y),
                num(r.value),
                num(r.quad_error),
                num(cfg.tolerance - r.value),
            ]);
        }
    }
    let mut out = Outcome::new(cfg.command);
    for (j, (label, _)) in params.iter().enumerate() {
        out.check(Check::new(
            format!("functional equation residual, lambda = {label}"),
            FE_ANCHOR,
            worst[j] < cfg.tolerance,
            flagged[j],
            format!("max residual {} over {} pairs", num(worst[j]), cfg.points),
        ));
    }
    out.tables.push(t);
    Ok(out)
}

fn lambda_label(cfg: &RunConfig) -> String {
    match &cfg.lambda_im {
        Coords::Rho(t) if *t == 0.0 => cfg.lambda.to_string(),
        im => format!("{} + i({im})", cfg.lambda),
    }
}

pub fn npp_scan(cfg: &RunConfig) -> RunResult {
    let rs = group_system(cfg)?;
    let lambda = cfg.lambda_param(&rs)?;
    let quad = cfg.quad();
    let grid = chamber_grid(&rs, &cfg.grid())?;
    let scan = npp_ratio_scan(&rs, &lambda, &grid, &quad)?;

    let mut rows = Table::with_coords(
        "rows",
        NPP_ANCHOR,
        &["point", "radius", "phi", "envelope", "ratio", "error"],
        1,
        rs.rank(),
    );
    for (i, r) in scan.rows.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(h_cells(&r.h));
        row.extend([
            num(radius_of(&rs, &r.h)),
            num(r.phi.value.re),
            num(r.envelope),
            num(r.ratio),
            num(r.ratio_error),
        ]);
        rows.push(row);
    }

    // ratio just off the origin along every ray
    let mut near = Vec::new();
    for u in grid_rays(&rs, &cfg.grid())? {
        let h = &u * (NEAR_ORIGIN / radius_of(&rs, &u));
        let s = npp_ratio_scan(&rs, &lambda, std::slice::from_ref(&h), &quad)?;
        near.extend(s.rows);
    }
    let near_dev = near.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);

    let mut band = Table::new(
        "band",
        NPP_ANCHOR,
        &["lambda", "min_ratio", "max_ratio", "near_origin_deviation", "points", "skipped"],
    );
    band.push(vec![
        dual_text(&rs, &lambda.re)?,
        num(scan.min_ratio),
        num(scan.max_ratio),
        num(near_dev),
        scan.rows.len().to_string(),
        scan.skipped.len().to_string(),
    ]);

    let mut out = Outcome::new(cfg.command);
    let flagged = scan.any_flagged() || near.iter().any(|r| r.phi.flagged);
    let finite = scan.min_ratio.is_finite() && scan.max_ratio.is_finite() && !scan.rows.is_empty();
    if is_monte_carlo(cfg) {
        let bad = scan.rows.iter().filter(|r| !(r.ratio + 3.0 * r.ratio_error > 0.0)).count();
        out.check(Check::new(
            "ratios positive within 3 sigma",
            NPP_ANCHOR,
            finite && bad == 0,
            flagged,
            format!("{bad} of {} ratios fail; band [{}, {}]", scan.rows.len(), num(scan.min_ratio), num(scan.max_ratio)),
        ));
    } else {
        out.check(Check::new(
            "ratio band finite and positive",
            NPP_ANCHOR,
            finite && scan.min_ratio > 0.0,
            flagged,
            format!("band [{}, {}] over {} points", num(scan.min_ratio), num(scan.max_ratio), scan.rows.len()),
        ));
    }
    out.check(Check::new(
        "ratio tends to 1 at the origin",
        NPP_ANCHOR,
        near_dev <= ORIGIN_RATIO_TOL,
        flagged,
        format!("max |ratio - 1| at radius {NEAR_ORIGIN:e}: {}", num(near_dev)),
    ));
    out.tables.push(rows);
    out.tables.push(band);
    Ok(out)
}

pub fn compare(cfg: &RunConfig) -> RunResult {
    if cfg.pairs > 0 {
        return compare_random(cfg);
    }
    let rs = group_system(cfg)?;
    let w = generate_weyl(&rs)?;
    let lambda = cfg.lambda_param(&rs)?;
    let mu = cfg.mu_param(&rs)?;
    let grid = chamber_grid(&rs, &cfg.grid())?;
    let rep = compare_on_grid(&rs, &w, &lambda, &mu, &grid, &cfg.quad())?;

    let mut rows = Table::with_coords(
        "rows",
        CMP_ANCHOR,
        &["point", "radius", "phi_lambda", "phi_mu", "difference", "error", "violation"],
        1,
        rs.rank(),
    );
    for (i, r) in rep.rows.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(h_cells(&r.h));
        row.extend([
            num(radius_of(&rs, &r.h)),
            num(r.phi_lambda),
            num(r.phi_mu),
            num(r.difference),
            num(r.difference_error),
            r.violation.to_string(),
        ]);
        rows.push(row);
    }
    let witness = rep.violations.first().map(|&i| &rep.rows[i]);
    let mut verdict = Table::new(
        "verdict",
        CMP_ANCHOR,
        &[
            "lambda",
            "mu",
            "hull_member",
            "violations",
            "decisive",
            "consistent",
            "witness_point",
            "witness_h",
            "grid_depth",
        ],
    );
    verdict.push(vec![
        dual_text(&rs, &lambda.re)?,
        dual_text(&rs, &mu.re)?,
        rep.hull_member.to_string(),
        rep.violations.len().to_string(),
        rep.decisive.to_string(),
        rep.consistent.to_string(),
        rep.violations.first().map_or("none".into(), |i| i.to_string()),
        witness.map_or("none".into(), |r| coords_text(r.h.as_slice())),
        num(rep.grid_depth),
    ]);
    let mut out = Outcome::new(cfg.command);
    out.notes.push(format!(
        "hull membership {}; {}",
        rep.hull_member,
        match witness {
            Some(r) => format!(
                "witness at h = ({}): phi_lambda - phi_mu = {} > 3 x {}",
                coords_text(r.h.as_slice()),
                num(r.difference),
                num(r.difference_error)
            ),
            None => "no violation on the grid".into(),
        }
    ));
    out.check(Check::new(
        "grid verdict agrees with hull membership",
        CMP_ANCHOR,
        rep.consistent,
        rep.any_flagged,
        format!(
            "hull member {}, {} violations, decisive {}",
            rep.hull_member,
            rep.violations.len(),
            rep.decisive
        ),
    ));
    out.tables.push(rows);
    out.tables.push(verdict);
    Ok(out)
}

/// Largest dual coordinate of the random parameters.
const RANDOM_PARAM_MAX: f64 = 1.5;

fn compare_random(cfg: &RunConfig) -> RunResult {
    let rs = group_system(cfg)?;
    let w = generate_weyl(&rs)?;
    let grid = PreparedGrid::new(&rs, chamber_grid(&rs, &cfg.grid())?, &cfg.quad())?;
    let mut t = Table::new(
        "pairs",
        CMP_ANCHOR,
        &["pair", "lambda", "mu", "hull_member", "violations", "decisive", "consistent", "max_difference"],
    );
    let (mut decisive, mut inconsistent, mut flagged) = (0, 0, false);
    for i in 0..cfg.pairs {
        let mut rng = param_rng(cfg, i);
        let l = uniform_coords(&mut rng, rs.rank(), 0.0, RANDOM_PARAM_MAX);
        let m = uniform_coords(&mut rng, rs.rank(), 0.0, RANDOM_PARAM_MAX);
        let lambda = SpectralParam::real(rs.from_dual_coords(&l)?);
        let mu = SpectralParam::real(rs.from_dual_coords(&m)?);
        let rep = compare_on_prepared(&rs, &w, &lambda, &mu, &grid)?;
        decisive += rep.decisive as usize;
        inconsistent += !rep.consistent as usize;
        flagged |= rep.any_flagged;
        let max_diff = rep.rows.iter().map(|r| r.difference).fold(f64::NEG_INFINITY, f64::max);
        t.push(vec![
            i.to_string(),
            coords_text(&l),
            coords_text(&m),
            rep.hull_member.to_string(),
            rep.violations.len().to_string(),
            rep.decisive.to_string(),
            rep.consistent.to_string(),
            num(max_diff),
        ]);
    }
    let mut out = Outcome::new(cfg.command);
    out.check(Check::new(
        "grid verdict agrees with hull membership wherever decisive",
        CMP_ANCHOR,
        inconsistent == 0,
        flagged,
        format!("{} pairs, {decisive} decisive, {inconsistent} inconsistent", cfg.pairs),
    ));
    out.tables.push(t);
    Ok(out)
}
