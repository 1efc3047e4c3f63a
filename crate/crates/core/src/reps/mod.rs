//! Spherical principal series of `SL(2, R)` in the compact picture.
//!
//! Vectors are functions on `K = SO(2)` invariant under `theta -> theta + pi`,
//! stored by their even Fourier modes. The group acts by
//! `(pi(g) f)(k) = exp(-(i nu + rho) H(g^-1 k)) f(kappa(g^-1 k))`, with
//! the Iwasawa pieces of `g^-1 k` computed here in closed form. The sign
//! of `H` is fixed at first use by a unitarity self-test and then checked
//! against the spherical functions of [`crate::spherical`].

use std::f64::consts::TAU;
use std::sync::OnceLock;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{sl2, GroupElement};
use crate::quadrature::{CircleRule, QuadratureSpec, Rule};
use crate::rms::rms_average;
use crate::rootsys::{build_root_system, RootSystem, SpectralParam};
use crate::spherical::phi;

pub const DEFAULT_N_MAX: usize = 64;
/// Circle order of [`default_quad`].
pub const REP_CIRCLE_ORDER: usize = 1024;
/// Gauss panels per unit of the graded variable; modes up to `N_MAX`
/// oscillate away from the cocycle peaks too.
const PANEL_DENSITY: f64 = 12.0;

/// Quadrature used when none is given: graded circle rule of order 1024.
pub fn default_quad() -> QuadratureSpec {
    QuadratureSpec::gauss_circle(REP_CIRCLE_ORDER)
}

/// Finite even-mode Fourier series `sum c_n exp(i n theta)`, `|n| <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVector {
    n_max: usize,
    coeffs: Vec<Complex64>,
}

impl FourierVector {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max % 2 != 0 {
            return Err(Error::InvalidArgument(format!("truncation degree {n_max} must be even")));
        }
        Ok(FourierVector {
            n_max,
            coeffs: vec![Complex64::new(0.0, 0.0); n_max + 1],
        })
    }

    /// The unit vector `e_n`.
    pub fn basis(n: i32, n_max: usize) -> Result<Self> {
        Self::from_modes(n_max, &[(n, Complex64::new(1.0, 0.0))])
    }

    pub fn from_modes(n_max: usize, modes: &[(i32, Complex64)]) -> Result<Self> {
        let mut v = Self::new(n_max)?;
        for &(n, c) in modes {
            v.set(n, c)?;
        }
        Ok(v)
    }

    /// Random vector with modes up to `max_mode` and Gaussian coefficients.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_mode: usize, n_max: usize) -> Result<Self> {
        let mut v = Self::new(n_max)?;
        let top = max_mode.min(n_max) as i32;
        for n in (-top..=top).filter(|n| n % 2 == 0) {
            let (a, b): (f64, f64) = (rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
            v.set(n, Complex64::new(a, b))?;
        }
        Ok(v)
    }

    fn index(&self, n: i32) -> Option<usize> {
        if n % 2 != 0 || n.unsigned_abs() as usize > self.n_max {
            None
        } else {
            Some(((n + self.n_max as i32) / 2) as usize)
        }
    }

    pub fn set(&mut self, n: i32, c: Complex64) -> Result<()> {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let i = self.index(n).ok_or_else(|| {
            Error::InvalidArgument(format!("mode {n} is odd or exceeds the truncation {}", self.n_max))
        })?;
        self.coeffs[i] = c;
        Ok(())
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn coeff(&self, n: i32) -> Complex64 {
        self.index(n).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// `(n, c_n)` for every stored mode.
    pub fn modes(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        let off = self.n_max as i32;
        self.coeffs.iter().enumerate().map(move |(i, c)| (2 * i as i32 - off, *c))
    }

    /// Largest `|n|` with a nonzero coefficient.
    pub fn top_mode(&self) -> usize {
        self.modes()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(n, _)| n.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self, other> = sum a_n conj(b_n)`.
    pub fn inner(&self, other: &FourierVector) -> Complex64 {
        self.modes().map(|(n, a)| a * other.coeff(n).conj()).sum()
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.modes()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * theta))
            .sum()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        FourierVector {
            n_max: self.n_max,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &FourierVector) -> Self {
        let n_max = self.n_max.max(other.n_max);
        let mut out = Self::new(n_max).expect("both degrees are even");
        for (n, c) in self.modes().chain(other.modes()) {
            let i = out.index(n).expect("mode within the larger truncation");
            out.coeffs[i] += c;
        }
        out
    }

    /// Projection to modes `|n| <= n_max`.
    pub fn truncated(&self, n_max: usize) -> Result<Self> {
        let mut out = Self::new(n_max)?;
        for (n, c) in self.modes() {
            if let Some(i) = out.index(n) {
                out.coeffs[i] = c;
            }
        }
        Ok(out)
    }
}

/// Unitary spherical principal series with parameter `lambda = i nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepParam {
    pub nu: f64,
}

impl RepParam {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(RepParam { nu })
    }

    /// `lambda = i nu` in the spherical-function coordinates of `sl(2, R)`.
    pub fn spectral(&self) -> SpectralParam {
        SpectralParam::from_dual(sl2_system(), &[0.0], &[self.nu]).expect("rank one parameter")
    }

    /// `(lambda(H_1), rho(H_1))` for `H_1 = diag(1, -1)`.
    fn exponents(&self) -> (f64, f64) {
        let rs = sl2_system();
        let h = rs.to_frame(&[1.0, -1.0]);
        (rs.pair(&self.spectral().im, &h), rs.pair(rs.rho(), &h))
    }
}

fn sl2_system() -> &'static RootSystem {
    static RS: OnceLock<RootSystem> = OnceLock::new();
    RS.get_or_init(|| build_root_system("sl(2,R)").expect("sl(2,R) is a valid identifier"))
}

/// `pi(g) xi` as a function on `K`, ready to be integrated.
struct Action {
    ginv: Matrix2<f64>,
    /// Exponent of `|v|` in the cocycle, `-(sign)(rho + i lambda)`.
    power: Complex64,
    rule: CircleRule,
    companion: CircleRule,
}

#[derive(Debug, Clone, Copy)]
struct RepQuad {
    per_panel: usize,
}

fn rep_quad(quad: &QuadratureSpec) -> Result<RepQuad> {
    quad.validate()?;
    match quad.rule {
        Rule::GaussCircle { order } => Ok(RepQuad {
            per_panel: (order / 64).max(6),
        }),
        _ => Err(Error::Unsupported {
            op: "principal series",
            what: format!("rule {}", quad.fingerprint()),
        }),
    }
}

impl Action {
    fn new(p: &RepParam, g: &GroupElement, q: RepQuad, sign: f64) -> Result<Self> {
        if g.n() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: g.n() });
        }
        let ginv = sl2::inv(&sl2::from_dmatrix(g.matrix()));
        // |g^-1 k_theta| has its features at theta = -b + j pi/2
        let (_, t, b) = sl2::cartan(&ginv);
        let delta = (-2.0 * t).exp();
        let (lam, rho) = p.exponents();
        Ok(Action {
            ginv,
            power: -sign * Complex64::new(rho, lam),
            rule: CircleRule::graded_dense(q.per_panel, PANEL_DENSITY, -b, delta),
            companion: CircleRule::graded_dense(q.per_panel - 4, PANEL_DENSITY, -b, delta),
        })
    }

    /// `(cocycle, kappa)` at `theta`: `g^-1 k_theta = k_kappa exp(H) n`
    /// with `H = diag(s, -s)`, `s = ln |g^-1 (cos, sin)|`.
    #[inline]
    fn iwasawa(&self, theta: f64) -> (Complex64, f64) {
        let v = self.ginv * Vector2::new(theta.cos(), theta.sin());
        let s = 0.5 * v.norm_squared().ln();
        ((self.power * s).exp(), v.y.atan2(v.x))
    }

    fn value(&self, xi: &FourierVector, theta: f64) -> Complex64 {
        let (c, kappa) = self.iwasawa(theta);
        c * xi.eval(kappa)
    }

    fn integrate(&self, rule: &CircleRule, f: &(dyn Fn(f64) -> Complex64 + Sync)) -> Complex64 {
        // fixed chunks merged in order keep the sum independent of threads
        let parts: Vec<Complex64> = rule
            .angles
            .par_chunks(256)
            .zip(rule.weights.par_chunks(256))
            .map(|(ths, ws)| ths.iter().zip(ws).map(|(&th, &w)| f(th) * w).sum())
            .collect();
        parts.into_iter().sum()
    }

    /// Integral and the difference to the companion rule.
    fn integrate_pair(&self, f: &(dyn Fn(f64) -> Complex64 + Sync)) -> (Complex64, f64) {
        let fine = self.integrate(&self.rule, f);
        let coarse = self.integrate(&self.companion, f);
        (fine, (fine - coarse).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepCalibration {
    /// Sign applied to `H` in the cocycle.
    pub sign: f64,
    /// `| ||pi(a_1) e_0|| - 1 |` for the signs `+1` and `-1`, `nu = 1`.
    pub unitarity_defects: [f64; 2],
    /// Largest `|<pi(g) e_0, e_0> - phi_(i nu)(g)|` on the lock set.
    pub lock_residual: f64,
}

const CALIBRATION_TOL: f64 = 1e-6;

fn calibrate() -> Result<RepCalibration> {
    let q = rep_quad(&default_quad())?;
    let p = RepParam::new(1.0)?;
    let e0 = FourierVector::basis(0, 2)?;
    let a1 = GroupElement::exp_diag(&[1.0, -1.0])?;
    let mut defects = [0.0; 2];
    for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
        let act = Action::new(&p, &a1, q, sign)?;
        let (n2, _) = act.integrate_pair(&|th| Complex64::new(act.value(&e0, th).norm_sqr(), 0.0));
        defects[i] = (n2.re.sqrt() - 1.0).abs();
    }
    let sign = match defects.iter().position(|d| *d < CALIBRATION_TOL) {
        Some(0) => 1.0,
        Some(_) => -1.0,
        None => {
            return Err(Error::Calibration(format!(
                "no cocycle sign is unitary: defects {defects:?}"
            )))
        }
    };
    let phi_quad = QuadratureSpec::default();
    let mut lock: f64 = 0.0;
    for nu in [0.0, 0.7, 1.0] {
        let p = RepParam::new(nu)?;
        for (a, t, b) in [(0.3, 0.5, -1.0), (1.1, 1.7, 0.2), (-0.6, 3.0, 2.4)] {
            let g = GroupElement::new(sl2::to_dmatrix(&sl2::kak(a, t, b)))?;
            let act = Action::new(&p, &g, q, sign)?;
            let (c, _) = act.integrate_pair(&|th| act.value(&e0, th));
            let ph = phi(sl2_system(), &p.spectral(), &g, &phi_quad)?.value;
            lock = lock.max((c - ph).norm());
        }
    }
    if !(lock < CALIBRATION_TOL) {
        return Err(Error::Calibration(format!(
            "unitary sign {sign} disagrees with the spherical functions by {lock:e}"
        )));
    }
    Ok(RepCalibration {
        sign,
        unitarity_defects: defects,
        lock_residual: lock,
    })
}

/// Outcome of the sign self-test, computed once per process.
pub fn rep_calibration() -> &'static Result<RepCalibration> {
    static CAL: OnceLock<Result<RepCalibration>> = OnceLock::new();
    CAL.get_or_init(calibrate)
}

fn cocycle_sign() -> Result<f64> {
    match rep_calibration() {
        Ok(c) => Ok(c.sign),
        Err(e) => Err(e.clone()),
    }
}

/// `pi(g) xi` projected to the modes of `xi`'s truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub vector: FourierVector,
    /// `||pi(g) xi||` in `L^2(K)`, before projection.
    pub full_norm: f64,
    /// Norm of the discarded modes; `full_norm - vector.norm()` is the
    /// truncation error of the reported norm.
    pub tail: f64,
    pub quad_error: f64,
    pub flagged: bool,
}

pub fn rep_apply(p: &RepParam, g: &GroupElement, xi: &FourierVector, quad: &QuadratureSpec) -> Result<Applied> {
    let q = rep_quad(quad)?;
    let act = Action::new(p, g, q, cocycle_sign()?)?;
    let n_max = xi.n_max();
    let project = |rule: &CircleRule| -> (Vec<Complex64>, f64) {
        let parts: Vec<(Vec<Complex64>, f64)> = rule
            .angles
            .par_chunks(256)
            .zip(rule.weights.par_chunks(256))
            .map(|(ths, ws)| {
                let mut c = vec![Complex64::new(0.0, 0.0); n_max + 1];
                let mut n2 = 0.0;
                for (&th, &w) in ths.iter().zip(ws) {
                    let f = act.value(xi, th) * w;
                    n2 += f.norm_sqr() / w;
                    // exp(-i n th) for n = -n_max, -n_max + 2, ...
                    let step = Complex64::from_polar(1.0, -2.0 * th);
                    let mut e = Complex64::from_polar(1.0, n_max as f64 * th);
                    for slot in c.iter_mut() {
                        *slot += f * e;
                        e *= step;
                    }
                }
                (c, n2)
            })
            .collect();
        let mut c = vec![Complex64::new(0.0, 0.0); n_max + 1];
        let mut n2 = 0.0;
        for (pc, pn) in parts {
            for (a, b) in c.iter_mut().zip(pc) {
                *a += b;
            }
            n2 += pn;
        }
        (c, n2)
    };
    let (fine, n2) = project(&act.rule);
    let (coarse, n2c) = project(&act.companion);
    let quad_error = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        .max((n2.sqrt() - n2c.sqrt()).abs());
    let vector = FourierVector {
        n_max,
        coeffs: fine,
    };
    let kept = vector.norm();
    let tail = (n2 - kept * kept).max(0.0).sqrt();
    let scale = xi.norm().max(1.0);
    Ok(Applied {
        full_norm: n2.sqrt(),
        tail,
        quad_error,
        // the projection shortens the norm by about tail^2 / (2 ||pi(g) xi||)
        flagged: !(n2.sqrt() - kept <= quad.tolerance * scale && quad_error <= quad.tolerance * scale),
        vector,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffValue {
    pub value: Complex64,
    pub quad_error: f64,
    pub flagged: bool,
}

/// `<pi(g) xi, eta>` in `L^2(K)`; no truncation is involved.
pub fn matrix_coefficient(
    p: &RepParam,
    g: &GroupElement,
    xi: &FourierVector,
    eta: &FourierVector,
    quad: &QuadratureSpec,
) -> Result<CoeffValue> {
    let q = rep_quad(quad)?;
    let act = Action::new(p, g, q, cocycle_sign()?)?;
    let (value, quad_error) = act.integrate_pair(&|th| act.value(xi, th) * eta.eval(th).conj());
    Ok(CoeffValue {
        value,
        quad_error,
        flagged: !(quad_error <= quad.tolerance * xi.norm().max(1.0) * eta.norm().max(1.0)),
    })
}

/// `| ||P pi(g) xi|| - ||xi|| |` with `P` the projection to the truncation.
pub fn unitarity_defect(p: &RepParam, g: &GroupElement, xi: &FourierVector, quad: &QuadratureSpec) -> Result<f64> {
    Ok((rep_apply(p, g, xi, quad)?.vector.norm() - xi.norm()).abs())
}

/// `|<pi(g h) xi, eta> - <P pi(h) xi, P pi(g^-1) eta>|`.
pub fn homomorphism_defect(
    p: &RepParam,
    g: &GroupElement,
    h: &GroupElement,
    xi: &FourierVector,
    eta: &FourierVector,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let lhs = matrix_coefficient(p, &(g * h), xi, eta, quad)?.value;
    let a = rep_apply(p, h, xi, quad)?.vector;
    let b = rep_apply(p, &g.inverse(), eta, quad)?.vector;
    Ok((lhs - a.inner(&b)).norm())
}

/// Largest change of a reported quantity of `rep_apply` when the
/// truncation degree is doubled: coefficient drift and norm change.
pub fn truncation_audit(p: &RepParam, g: &GroupElement, xi: &FourierVector, quad: &QuadratureSpec) -> Result<f64> {
    let small = rep_apply(p, g, xi, quad)?;
    let big = rep_apply(p, g, &xi.truncated(2 * xi.n_max())?, quad)?;
    let drift = small
        .vector
        .modes()
        .map(|(n, c)| (c - big.vector.coeff(n)).norm())
        .fold(0.0, f64::max);
    Ok(drift.max((big.vector.norm() - small.vector.norm()).abs()))
}

/// `|<pi(g) e_0, e_0> - phi_(i nu)(g)|`.
pub fn phi_lock_residual(p: &RepParam, g: &GroupElement, quad: &QuadratureSpec) -> Result<f64> {
    let e0 = FourierVector::basis(0, 2)?;
    let c = matrix_coefficient(p, g, &e0, &e0, quad)?.value;
    let ph = phi(sl2_system(), &p.spectral(), g, &QuadratureSpec::default())?.value;
    Ok((c - ph).norm())
}

fn phi0(t: f64) -> Result<f64> {
    let x = GroupElement::exp_diag(&[t, -t])?;
    Ok(phi(sl2_system(), &SpectralParam::zero(1), &x, &QuadratureSpec::default())?.value.re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KFiniteRow {
    pub t: f64,
    pub k_index: usize,
    pub k2_index: usize,
    pub m: i32,
    pub n: i32,
    pub coeff_abs: f64,
    /// `phi_0(a_t)`.
    pub bound: f64,
    /// `(1 + tol) bound - |coeff|`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFiniteReport {
    pub rows: Vec<KFiniteRow>,
    pub worst_margin: f64,
    pub flagged: bool,
}

impl KFiniteReport {
    pub fn holds(&self) -> bool {
        self.worst_margin >= 0.0
    }
}

/// `|<pi(k a_t k') e_m, e_n>| <= (1 + tol) phi_0(a_t)` over `t_values`
/// and a `k_grid x k_grid` grid of rotations.
pub fn kfinite_bound_report(
    p: &RepParam,
    modes: &[(i32, i32)],
    t_values: &[f64],
    k_grid: usize,
    tol: f64,
    quad: &QuadratureSpec,
) -> Result<KFiniteReport> {
    if modes.is_empty() || t_values.is_empty() || k_grid == 0 {
        return Err(Error::EmptyParameterSet);
    }
    let top = modes.iter().map(|(m, n)| m.unsigned_abs().max(n.unsigned_abs())).max().unwrap_or(0) as usize;
    let n_max = top + top % 2;
    let mut rows = Vec::new();
    let mut flagged = false;
    for &t in t_values {
        let bound = phi0(t)?;
        for i in 0..k_grid {
            for j in 0..k_grid {
                let g = GroupElement::new(sl2::to_dmatrix(&sl2::kak(
                    TAU * i as f64 / k_grid as f64,
                    t,
                    TAU * j as f64 / k_grid as f64,
                )))?;
                for &(m, n) in modes {
                    let c = matrix_coefficient(
                        p,
                        &g,
                        &FourierVector::basis(m, n_max)?,
                        &FourierVector::basis(n, n_max)?,
                        quad,
                    )?;
                    flagged |= c.flagged;
                    let coeff_abs = c.value.norm();
                    rows.push(KFiniteRow {
                        t,
                        k_index: i,
                        k2_index: j,
                        m,
                        n,
                        coeff_abs,
                        bound,
                        margin: (1.0 + tol) * bound - coeff_abs,
                    });
                }
            }
        }
    }
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(KFiniteReport {
        rows,
        worst_margin,
        flagged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsCoeffRow {
    pub t: f64,
    /// `A<pi(.) xi, eta>(a_t)`.
    pub rms: f64,
    /// `||xi|| ||eta|| phi_0(a_t)`.
    pub bound: f64,
    /// `bound + tol - rms`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsCoeffReport {
    pub rows: Vec<RmsCoeffRow>,
    pub worst_margin: f64,
    pub flagged: bool,
}

impl RmsCoeffReport {
    pub fn holds(&self) -> bool {
        self.worst_margin >= 0.0
    }
}

/// `A<pi(.) xi, eta>(a_t) <= ||xi|| ||eta|| phi_0(a_t) + tol` over `t_values`.
///
/// The `K x K` average uses an equispaced grid fine enough to be exact for
/// the trigonometric polynomial `(k, k') -> <pi(k a_t k') xi, eta>`.
pub fn rms_coeff_bound_report(
    p: &RepParam,
    xi: &FourierVector,
    eta: &FourierVector,
    t_values: &[f64],
    tol: f64,
    quad: &QuadratureSpec,
) -> Result<RmsCoeffReport> {
    if t_values.is_empty() {
        return Err(Error::EmptyParameterSet);
    }
    rep_quad(quad)?;
    cocycle_sign()?;
    let order = (2 * xi.top_mode().max(eta.top_mode()) + 2).max(8);
    let grid = QuadratureSpec::gauss_circle(order);
    let mut rows = Vec::new();
    let mut flagged = false;
    for &t in t_values {
        let x = GroupElement::exp_diag(&[t, -t])?;
        let u = |y: &GroupElement| -> Complex64 {
            matrix_coefficient(p, y, xi, eta, quad).map_or(Complex64::new(f64::NAN, 0.0), |c| c.value)
        };
        let r = rms_average(&u, &x, &grid)?;
        if !r.value.is_finite() {
            return Err(Error::NonFinite);
        }
        flagged |= r.flagged;
        let bound = xi.norm() * eta.norm() * phi0(t)?;
        rows.push(RmsCoeffRow {
            t,
            rms: r.value,
            bound,
            margin: bound + tol - r.value,
        });
    }
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(RmsCoeffReport {
        rows,
        worst_margin,
        flagged,
    })
}

#[cfg(test)]
mod tests;
