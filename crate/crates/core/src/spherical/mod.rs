//! Spherical functions through the Harish-Chandra integral, with the
//! functional equation, the two-sided envelope and the hull comparison
//! as numerical checks.

mod calibrate;
mod kint;

pub use calibrate::{calibration_report, convention, CalibrationReport, CandidateOutcome};
pub use kint::{k_samples, Convention, KIntegrator, SphericalValue};

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{radius_of, sl2, GroupElement};
use crate::quadrature::{CircleRule, QuadratureSpec, Rule};
use crate::rootsys::{in_convex_weyl_hull, RootSystem, SpectralParam, WeylGroup, CHAMBER_TOL};

/// Tolerance for `<lambda, alpha> = 0` when collecting the roots that carry
/// polynomial factors in the envelope.
pub const SIGMA_LAMBDA_TOL: f64 = 1e-9;

/// `phi_lambda(x)` under the calibrated convention.
pub fn phi(rs: &RootSystem, lambda: &SpectralParam, x: &GroupElement, quad: &QuadratureSpec) -> Result<SphericalValue> {
    check_param(rs, lambda)?;
    Ok(KIntegrator::new(rs, x, quad)?.eval(lambda))
}

/// `phi_lambda(exp H)` for `H` in frame coordinates.
pub fn phi_at(rs: &RootSystem, lambda: &SpectralParam, h: &DVector<f64>, quad: &QuadratureSpec) -> Result<SphericalValue> {
    phi(rs, lambda, &exp_frame(rs, h)?, quad)
}

pub fn exp_frame(rs: &RootSystem, h: &DVector<f64>) -> Result<GroupElement> {
    if rs.group_size().is_none() {
        return Err(Error::Unsupported {
            op: "exp",
            what: format!("abstract root system {}", rs.label()),
        });
    }
    GroupElement::exp_diag(&rs.from_frame(h))
}

fn check_param(rs: &RootSystem, lambda: &SpectralParam) -> Result<()> {
    if lambda.rank() != rs.rank() {
        return Err(Error::DimensionMismatch {
            expected: rs.rank(),
            got: lambda.rank(),
        });
    }
    Ok(())
}

/// `|int_K phi(x k y) dk - phi(x) phi(y)|` with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub quad_error: f64,
    pub flagged: bool,
}

pub fn functional_equation_residual(
    rs: &RootSystem,
    lambda: &SpectralParam,
    x: &GroupElement,
    y: &GroupElement,
    quad: &QuadratureSpec,
) -> Result<Residual> {
    Ok(functional_equation_residuals(rs, std::slice::from_ref(lambda), x, y, quad)?[0])
}

/// Residuals for several parameters sharing the outer and inner
/// discretisations.
///
/// On `SL(2)` the outer integral uses the graded circle rule aligned with
/// the minimum of the Cartan radius of `x k y`; on larger groups it uses
/// the Monte Carlo samples of `quad`.
pub fn functional_equation_residuals(
    rs: &RootSystem,
    lambdas: &[SpectralParam],
    x: &GroupElement,
    y: &GroupElement,
    quad: &QuadratureSpec,
) -> Result<Vec<Residual>> {
    for l in lambdas {
        check_param(rs, l)?;
    }
    let n = x.n();
    let phi_x = KIntegrator::new(rs, x, quad)?.eval_many(lambdas);
    let phi_y = KIntegrator::new(rs, y, quad)?.eval_many(lambdas);

    let inner = |g: GroupElement| -> Result<Vec<SphericalValue>> { Ok(KIntegrator::new(rs, &g, quad)?.eval_many(lambdas)) };
    // (value, error) of the outer integral for each lambda
    let outer: Vec<(Complex64, f64)> = match (&quad.rule, n) {
        (Rule::GaussCircle { order }, 2) => {
            let (_, s, b1) = sl2::cartan(&sl2::from_dmatrix(x.matrix()));
            let (a2, u, _) = sl2::cartan(&sl2::from_dmatrix(y.matrix()));
            let phase = FRAC_PI_2 - b1 - a2;
            let delta = (-2.0 * s.min(u)).exp();
            let xm = sl2::from_dmatrix(x.matrix());
            let ym = sl2::from_dmatrix(y.matrix());
            let run = |rule: &CircleRule| -> Result<Vec<(Complex64, f64)>> {
                let vals: Vec<Vec<SphericalValue>> = rule
                    .angles
                    .par_iter()
                    .map(|&th| inner(GroupElement::new(sl2::to_dmatrix(&(xm * sl2::rot(th) * ym)))?))
                    .collect::<Result<_>>()?;
                Ok((0..lambdas.len())
                    .map(|j| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        let mut err = 0.0;
                        for (v, w) in vals.iter().zip(&rule.weights) {
                            acc += v[j].value * *w;
                            err += v[j].quad_error * w;
                        }
                        (acc, err)
                    })
                    .collect())
            };
            let (fine_rule, coarse_rule) = CircleRule::graded_pair(*order, phase, delta);
            let fine = run(&fine_rule)?;
            let coarse = run(&coarse_rule)?;
            fine.iter()
                .zip(&coarse)
                .map(|(f, c)| (f.0, f.1 + (f.0 - c.0).norm()))
                .collect()
        }
        (Rule::MonteCarlo { samples, seed }, _) => {
            let ks = k_samples(n, *samples, *seed ^ 0x0F0F_0F0F);
            let nn = n * n;
            let vals: Vec<Vec<SphericalValue>> = ks
                .par_chunks(nn)
                .map(|k| {
                    let k = nalgebra::DMatrix::from_column_slice(n, n, k);
                    inner(GroupElement::new(x.matrix() * k * y.matrix())?)
                })
                .collect::<Result<_>>()?;
            (0..lambdas.len())
                .map(|j| {
                    let mut mv_re = crate::quadrature::MeanVar::default();
                    let mut mv_im = crate::quadrature::MeanVar::default();
                    let mut inner_err = 0.0;
                    for v in &vals {
                        mv_re.push(v[j].value.re);
                        mv_im.push(v[j].value.im);
                        inner_err += v[j].quad_error / vals.len() as f64;
                    }
                    (
                        Complex64::new(mv_re.mean(), mv_im.mean()),
                        mv_re.std_error().hypot(mv_im.std_error()) + inner_err,
                    )
                })
                .collect()
        }
        _ => {
            return Err(Error::Unsupported {
                op: "functional_equation_residual",
                what: format!("rule {} on SL({n}, R)", quad.fingerprint()),
            })
        }
    };
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let prod = phi_x[j].value * phi_y[j].value;
            let err = outer[j].1 + phi_x[j].value.norm() * phi_y[j].quad_error + phi_y[j].value.norm() * phi_x[j].quad_error;
            Residual {
                value: (outer[j].0 - prod).norm(),
                quad_error: err,
                flagged: quad.is_flagged(1.0, err),
            }
        })
        .collect())
}

/// `p_lambda(H) exp((lambda - rho)(H))` with
/// `p_lambda(H) = prod_{alpha in Sigma_lambda} (1 + alpha(H))` over positive
/// roots orthogonal to `lambda`.
pub fn npp_envelope(rs: &RootSystem, lambda: &SpectralParam, h: &DVector<f64>) -> Result<f64> {
    check_param(rs, lambda)?;
    lambda.require_real()?;
    lambda.require_dominant(rs)?;
    if !rs.in_closed_chamber(h, CHAMBER_TOL) {
        return Err(Error::OutsideChamber {
            min_root: rs.min_root_value(h),
        });
    }
    let mut p = 1.0;
    for a in rs.positive_roots() {
        if rs.pair(&lambda.re, a).abs() <= SIGMA_LAMBDA_TOL {
            p *= 1.0 + rs.pair(a, h).max(0.0);
        }
    }
    Ok(p * rs.pair(&(&lambda.re - rs.rho()), h).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NppRow {
    pub h: DVector<f64>,
    pub phi: SphericalValue,
    pub envelope: f64,
    pub ratio: f64,
    /// Error of `ratio` inherited from `phi`.
    pub ratio_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NppScan {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub rows: Vec<NppRow>,
    /// Grid points skipped because the envelope underflowed.
    pub skipped: Vec<DVector<f64>>,
}

impl NppScan {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.phi.flagged)
    }
}

/// Ratios `phi_lambda(exp H) / envelope(H)` over a grid.
pub fn npp_ratio_scan(
    rs: &RootSystem,
    lambda: &SpectralParam,
    grid: &[DVector<f64>],
    quad: &QuadratureSpec,
) -> Result<NppScan> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    for h in grid {
        let r = radius_of(rs, h);
        if r > quad.truncation_radius * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "grid point at radius {r} beyond truncation radius {}",
                quad.truncation_radius
            )));
        }
    }
    let evaluated: Vec<Option<NppRow>> = grid
        .iter()
        .map(|h| {
            let envelope = npp_envelope(rs, lambda, h)?;
            if !(envelope > f64::MIN_POSITIVE) {
                return Ok(None);
            }
            let phi = phi_at(rs, lambda, h, quad)?;
            Ok(Some(NppRow {
                h: h.clone(),
                ratio: phi.value.re / envelope,
                ratio_error: phi.quad_error / envelope,
                phi,
                envelope,
            }))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (h, r) in grid.iter().zip(evaluated) {
        match r {
            Some(row) => rows.push(row),
            None => skipped.push(h.clone()),
        }
    }
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(NppScan {
        min_ratio,
        max_ratio,
        rows,
        skipped,
    })
}

/// Radial grids along rays of the closed chamber.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Largest Cartan radius.
    pub radius: f64,
    /// Smallest nonzero Cartan radius.
    pub r_min: f64,
    /// Geometrically spaced radii per ray.
    pub radii: usize,
    /// Interior rays (rank two and above).
    pub interior_rays: usize,
    /// Relative offset of the near-wall rays; zero disables them.
    pub wall_offset: f64,
    pub include_origin: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            radius: 6.0,
            r_min: 0.1,
            radii: 12,
            interior_rays: 3,
            wall_offset: 1e-2,
            include_origin: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.r_min > 0.0 && self.r_min <= self.radius) || self.radii == 0 {
            return Err(Error::InvalidArgument("grid needs 0 < r_min <= radius and at least one radius".into()));
        }
        if !(self.wall_offset >= 0.0) {
            return Err(Error::InvalidArgument("wall offset must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn radii_values(&self) -> Vec<f64> {
        if self.radii == 1 {
            return vec![self.radius];
        }
        let ratio = self.radius / self.r_min;
        (0..self.radii)
            .map(|j| self.r_min * ratio.powf(j as f64 / (self.radii - 1) as f64))
            .collect()
    }
}

/// Unit directions of the grid rays.
pub fn grid_rays(rs: &RootSystem, spec: &GridSpec) -> Result<Vec<DVector<f64>>> {
    let duals: Vec<DVector<f64>> = crate::rootsys::dual_basis(rs)?
        .into_iter()
        .map(|d| {
            let n = d.norm();
            d / n
        })
        .collect();
    let unit = |v: DVector<f64>| {
        let n = v.norm();
        v / n
    };
    let r = rs.rank();
    let mut rays = Vec::new();
    if r == 1 {
        rays.push(duals[0].clone());
        return Ok(rays);
    }
    if r == 2 {
        let m = spec.interior_rays;
        for k in 1..=m {
            let s = k as f64 / (m + 1) as f64;
            rays.push(unit(&duals[0] * (1.0 - s) + &duals[1] * s));
        }
    } else if spec.interior_rays > 0 {
        rays.push(unit(duals.iter().fold(DVector::zeros(r), |acc, d| acc + d)));
    }
    if spec.wall_offset > 0.0 {
        // ray on the wall alpha_j = 0, nudged into the interior
        for j in 0..r {
            let mut v = DVector::zeros(r);
            for (i, d) in duals.iter().enumerate() {
                if i != j {
                    v += d;
                }
            }
            let v = unit(v);
            rays.push(unit(&v + &duals[j] * spec.wall_offset));
        }
    }
    Ok(rays)
}

/// Grid points in frame coordinates, scaled so each has the stated Cartan
/// radius.
pub fn chamber_grid(rs: &RootSystem, spec: &GridSpec) -> Result<Vec<DVector<f64>>> {
    spec.validate()?;
    let mut pts = Vec::new();
    if spec.include_origin {
        pts.push(DVector::zeros(rs.rank()));
    }
    for u in grid_rays(rs, spec)? {
        let c = radius_of(rs, &u);
        for r in spec.radii_values() {
            pts.push(&u * (r / c));
        }
    }
    Ok(pts)
}

/// K-integrators for every grid point, reusable across parameters.
#[derive(Debug, Clone)]
pub struct PreparedGrid {
    pub points: Vec<DVector<f64>>,
    pub integrators: Vec<KIntegrator>,
}

impl PreparedGrid {
    pub fn new(rs: &RootSystem, points: Vec<DVector<f64>>, quad: &QuadratureSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        let integrators = points
            .iter()
            .map(|h| KIntegrator::new(rs, &exp_frame(rs, h)?, quad))
            .collect::<Result<_>>()?;
        Ok(PreparedGrid { points, integrators })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub h: DVector<f64>,
    pub phi_lambda: f64,
    pub phi_mu: f64,
    /// `phi_lambda - phi_mu` and its error, from a single integrand.
    pub difference: f64,
    pub difference_error: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    pub violations: Vec<usize>,
    pub hull_member: bool,
    /// The grid verdict (no violations) agrees with membership whenever
    /// it is decisive.
    pub consistent: bool,
    /// Membership false and at least one violation, or membership true.
    pub decisive: bool,
    /// Largest Cartan radius scanned.
    pub grid_depth: f64,
    pub any_flagged: bool,
}

/// Number of error bars a difference must exceed to count as a violation.
pub const VIOLATION_SIGMAS: f64 = 3.0;

pub fn compare_on_grid(
    rs: &RootSystem,
    w: &WeylGroup,
    lambda: &SpectralParam,
    mu: &SpectralParam,
    grid: &[DVector<f64>],
    quad: &QuadratureSpec,
) -> Result<CompareReport> {
    let prepared = PreparedGrid::new(rs, grid.to_vec(), quad)?;
    compare_on_prepared(rs, w, lambda, mu, &prepared)
}

/// Records `phi_lambda > phi_mu` beyond the error bar at each point and
/// cross-checks against hull membership.
pub fn compare_on_prepared(
    rs: &RootSystem,
    w: &WeylGroup,
    lambda: &SpectralParam,
    mu: &SpectralParam,
    grid: &PreparedGrid,
) -> Result<CompareReport> {
    check_param(rs, lambda)?;
    check_param(rs, mu)?;
    lambda.require_real()?;
    mu.require_real()?;
    let hull_member = in_convex_weyl_hull(rs, w, lambda, mu)?;
    let mut rows = Vec::with_capacity(grid.points.len());
    let mut violations = Vec::new();
    let mut any_flagged = false;
    for (i, (h, k)) in grid.points.iter().zip(&grid.integrators).enumerate() {
        let pl = k.eval(lambda);
        let pm = k.eval(mu);
        let d = k.eval_difference(lambda, mu);
        any_flagged |= pl.flagged || pm.flagged;
        let slack = VIOLATION_SIGMAS * d.quad_error + 1e-12 * pl.value.re.abs().max(pm.value.re.abs());
        let violation = d.value.re > slack;
        if violation {
            violations.push(i);
        }
        rows.push(CompareRow {
            h: h.clone(),
            phi_lambda: pl.value.re,
            phi_mu: pm.value.re,
            difference: d.value.re,
            difference_error: d.quad_error,
            violation,
        });
    }
    let grid_depth = grid.points.iter().map(|h| radius_of(rs, h)).fold(0.0, f64::max);
    Ok(CompareReport {
        consistent: !(hull_member && !violations.is_empty()),
        decisive: hull_member || !violations.is_empty(),
        hull_member,
        violations,
        rows,
        grid_depth,
        any_flagged,
    })
}

#[cfg(test)]
mod tests;
