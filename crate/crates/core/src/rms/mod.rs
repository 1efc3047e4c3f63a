//! Root-mean-square averages over `K x K`, convolution of compactly
//! supported test functions and the norms `||f||_(lambda)`.

mod conv;

pub use conv::{
    convolve, convolve_with, eigenfunction_residual, submultiplicativity_report, ConvValue, SubmultReport, SubmultRow,
    JACKKNIFE_BATCHES,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::groups::{cartan_radius, chamber_rule_split, haar_sample_k, sl2, GroupElement};
use crate::quadrature::{chunk_rng, MeanVar, QuadratureSpec, Rule};
use crate::rootsys::{RootSystem, SpectralParam};
use crate::spherical::{exp_frame, KIntegrator};

/// Largest angular frequency allowed in a test function.
pub const MAX_DEGREE: i32 = 8;
const SPAN: usize = (2 * MAX_DEGREE + 1) as usize;

/// `p(t) = (1 - ((t - center) / h)^2)^order` for `|t - center| < h`, zero
/// otherwise, with `h = radius - center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub radius: f64,
    pub center: f64,
    pub order: u32,
}

impl Profile {
    pub fn new(radius: f64, center: f64, order: u32) -> Result<Self> {
        if !(center >= 0.0 && radius > center && radius.is_finite()) {
            return Err(Error::InvalidTestFunction(format!(
                "profile needs 0 <= center < radius, got center {center}, radius {radius}"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidTestFunction("profile order must be at least 1".into()));
        }
        Ok(Profile { radius, center, order })
    }

    pub fn half_width(&self) -> f64 {
        self.radius - self.center
    }

    pub fn eval(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.half_width();
        if u.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - u * u).powi(self.order as i32)
        }
    }

    /// Smallest radius in the support.
    pub fn inner_edge(&self) -> f64 {
        (self.center - self.half_width()).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularTerm {
    pub m: i32,
    pub n: i32,
    pub coeff: Complex64,
}

/// `p(t) sum c_mn exp(i (m th1 + n th2))` at `R(th1) a_t R(th2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub profile: Profile,
    pub terms: Vec<AngularTerm>,
}

/// A finite sum of bump profiles times trigonometric polynomials on
/// `K x K`. On `SL(n)` with `n >= 3` only bi-invariant terms are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    group_n: usize,
    components: Vec<Component>,
}

impl TestFunction {
    pub fn new(group_n: usize, components: Vec<Component>) -> Result<Self> {
        if group_n < 2 {
            return Err(Error::InvalidTestFunction(format!("SL({group_n}) is not supported")));
        }
        let mut out = Vec::with_capacity(components.len());
        for c in components {
            let mut merged: Vec<AngularTerm> = Vec::new();
            for t in &c.terms {
                if t.m.abs() > MAX_DEGREE || t.n.abs() > MAX_DEGREE {
                    return Err(Error::InvalidTestFunction(format!(
                        "frequency ({}, {}) exceeds degree {MAX_DEGREE}",
                        t.m, t.n
                    )));
                }
                if (t.m - t.n) % 2 != 0 {
                    // -I = R(pi) has Cartan angles shifted by (pi, pi)
                    return Err(Error::InvalidTestFunction(format!(
                        "frequencies ({}, {}) must have equal parity",
                        t.m, t.n
                    )));
                }
                if group_n > 2 && (t.m, t.n) != (0, 0) {
                    return Err(Error::InvalidTestFunction(
                        "only K-bi-invariant test functions are supported beyond SL(2)".into(),
                    ));
                }
                if c.profile.eval(0.0) != 0.0 && t.m != t.n {
                    // at t = 0 only th1 + th2 is determined
                    return Err(Error::InvalidTestFunction(format!(
                        "term ({}, {}) is discontinuous at the identity for a profile not vanishing there",
                        t.m, t.n
                    )));
                }
                if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
                match merged.iter_mut().find(|u| u.m == t.m && u.n == t.n) {
                    Some(u) => u.coeff += t.coeff,
                    None => merged.push(*t),
                }
            }
            merged.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
            merged.sort_by_key(|t| (t.m, t.n));
            if !merged.is_empty() {
                out.push(Component {
                    profile: c.profile,
                    terms: merged,
                });
            }
        }
        Ok(TestFunction {
            group_n,
            components: out,
        })
    }

    pub fn zero(group_n: usize) -> Self {
        TestFunction {
            group_n,
            components: Vec::new(),
        }
    }

    /// `c p(radius(x))`.
    pub fn bi_invariant(group_n: usize, profile: Profile, c: f64) -> Result<Self> {
        Self::new(
            group_n,
            vec![Component {
                profile,
                terms: vec![AngularTerm {
                    m: 0,
                    n: 0,
                    coeff: Complex64::new(c, 0.0),
                }],
            }],
        )
    }

    /// Random `SL(2)` test function with frequencies up to `max_degree` and
    /// support inside `[0, radius]`. About half the draws are bi-invariant
    /// bumps centred at the identity; the rest are annular bumps with
    /// angular factors.
    pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R, max_degree: i32, radius: f64) -> Result<Self> {
        let order = rng.random_range(1..=3);
        if rng.random::<bool>() {
            let r = radius * rng.random_range(0.4..1.0);
            return Self::bi_invariant(2, Profile::new(r, 0.0, order)?, rng.random_range(0.5..2.0));
        }
        let outer = radius * rng.random_range(0.5..1.0);
        let center = outer * rng.random_range(0.55..0.75);
        let profile = Profile::new(outer, center, order)?;
        let d = max_degree.clamp(0, MAX_DEGREE);
        let count = rng.random_range(1..=4);
        let mut terms = Vec::new();
        for _ in 0..count {
            let m = rng.random_range(-d..=d);
            let mut n = rng.random_range(-d..=d);
            if (m - n) % 2 != 0 {
                n += if n < d { 1 } else { -1 };
            }
            terms.push(AngularTerm {
                m,
                n,
                coeff: Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            });
        }
        Self::new(2, vec![Component { profile, terms }])
    }

    pub fn group_n(&self) -> usize {
        self.group_n
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn support_radius(&self) -> f64 {
        self.components.iter().map(|c| c.profile.radius).fold(0.0, f64::max)
    }

    pub fn max_degree(&self) -> i32 {
        self.components
            .iter()
            .flat_map(|c| c.terms.iter().map(|t| t.m.abs().max(t.n.abs())))
            .max()
            .unwrap_or(0)
    }

    pub fn is_k_bi_invariant(&self) -> bool {
        self.components.iter().all(|c| c.terms.iter().all(|t| t.m == 0 && t.n == 0))
    }

    /// Sufficient test: bi-invariant with nonnegative real coefficients.
    pub fn is_nonnegative(&self) -> bool {
        self.is_k_bi_invariant()
            && self
                .components
                .iter()
                .all(|c| c.terms.iter().all(|t| t.coeff.im == 0.0 && t.coeff.re >= 0.0))
    }

    /// Radii where the radial behaviour is not smooth, increasing, ending
    /// at the support radius.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = Vec::new();
        for c in &self.components {
            if c.profile.inner_edge() > 0.0 {
                b.push(c.profile.inner_edge());
            }
            b.push(c.profile.radius);
        }
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        b
    }

    /// Value at `R(th1) a_t R(th2)` in `SL(2)`.
    pub fn eval_sl2(&self, th1: f64, t: f64, th2: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.components {
            let p = c.profile.eval(t);
            if p == 0.0 {
                continue;
            }
            for term in &c.terms {
                acc += term.coeff * Complex64::from_polar(p, term.m as f64 * th1 + term.n as f64 * th2);
            }
        }
        acc
    }

    /// Value of a bi-invariant function at Cartan radius `r`.
    fn eval_radial(&self, r: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.components {
            let p = c.profile.eval(r);
            for term in &c.terms {
                acc += term.coeff * p;
            }
        }
        acc
    }

    pub fn eval(&self, x: &GroupElement) -> Complex64 {
        if x.n() == 2 {
            let (a, t, b) = sl2::cartan(&sl2::from_dmatrix(x.matrix()));
            self.eval_sl2(a, t, b)
        } else {
            self.eval_radial(cartan_radius(x))
        }
    }

    /// `(A f)(x)` at Cartan radius `t`: the `l^2` norm of the combined
    /// angular coefficients (Parseval on `K x K`).
    pub fn rms_at(&self, t: f64) -> f64 {
        let mut coeffs: Vec<((i32, i32), Complex64)> = Vec::new();
        for c in &self.components {
            let p = c.profile.eval(t);
            if p == 0.0 {
                continue;
            }
            for term in &c.terms {
                match coeffs.iter_mut().find(|(k, _)| *k == (term.m, term.n)) {
                    Some((_, v)) => *v += term.coeff * p,
                    None => coeffs.push(((term.m, term.n), term.coeff * p)),
                }
            }
        }
        coeffs.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn rms(&self, x: &GroupElement) -> f64 {
        self.rms_at(cartan_radius(x))
    }

    /// Coefficients of `exp(i m phi)` in `phi -> f(R(phi) y)`, `y = R(th1)
    /// a_t R(th2)`, indexed by `m + MAX_DEGREE`.
    fn left_fourier(&self, th1: f64, t: f64, th2: f64, out: &mut [Complex64; SPAN]) {
        out.fill(Complex64::new(0.0, 0.0));
        for c in &self.components {
            let p = c.profile.eval(t);
            if p == 0.0 {
                continue;
            }
            for term in &c.terms {
                out[(term.m + MAX_DEGREE) as usize] +=
                    term.coeff * Complex64::from_polar(p, term.m as f64 * th1 + term.n as f64 * th2);
            }
        }
    }

    /// Coefficients of `exp(i n psi)` in `psi -> f(y R(psi))`.
    fn right_fourier(&self, th1: f64, t: f64, th2: f64, out: &mut [Complex64; SPAN]) {
        out.fill(Complex64::new(0.0, 0.0));
        for c in &self.components {
            let p = c.profile.eval(t);
            if p == 0.0 {
                continue;
            }
            for term in &c.terms {
                out[(term.n + MAX_DEGREE) as usize] +=
                    term.coeff * Complex64::from_polar(p, term.m as f64 * th1 + term.n as f64 * th2);
            }
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let comps = self
            .components
            .iter()
            .map(|comp| Component {
                profile: comp.profile,
                terms: comp
                    .terms
                    .iter()
                    .map(|t| AngularTerm {
                        coeff: t.coeff * c,
                        ..*t
                    })
                    .collect(),
            })
            .collect();
        Self::new(self.group_n, comps).expect("scaling preserves validity")
    }

    pub fn add(&self, other: &TestFunction) -> Result<Self> {
        if self.group_n != other.group_n {
            return Err(Error::DimensionMismatch {
                expected: self.group_n,
                got: other.group_n,
            });
        }
        let mut comps = self.components.clone();
        comps.extend(other.components.iter().cloned());
        Self::new(self.group_n, comps)
    }
}

/// `f*(x) = conj f(x^-1)`.
///
/// With `x^-1 = R(pi/2 - th2) a_t R(-pi/2 - th1)`, the term `c_mn` moves
/// to frequency `(n, m)` with coefficient `conj(c_mn) (-1)^((m - n) / 2)`.
pub fn star_involution(f: &TestFunction) -> TestFunction {
    let comps = f
        .components
        .iter()
        .map(|c| Component {
            profile: c.profile,
            terms: c
                .terms
                .iter()
                .map(|t| {
                    let sign = if ((t.m - t.n) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    AngularTerm {
                        m: t.n,
                        n: t.m,
                        coeff: t.coeff.conj() * sign,
                    }
                })
                .collect(),
        })
        .collect();
    TestFunction::new(f.group_n, comps).expect("the involution preserves validity")
}

/// `(int int |u(k x k')|^2 dk dk')^(1/2)` with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsValue {
    pub value: f64,
    pub error: f64,
    pub flagged: bool,
}

/// Root-mean-square average of `u` over the `K x K` orbit of `x`.
///
/// On `SL(2)` an equispaced grid (orders from a product-gauss rule, or the
/// circle order in both factors) is used; it is exact for trigonometric
/// polynomials of degree below the order, and the error estimate compares
/// with the half grid. Elsewhere pairs of Haar samples are used.
pub fn rms_average(
    u: &(dyn Fn(&GroupElement) -> Complex64 + Sync),
    x: &GroupElement,
    quad: &QuadratureSpec,
) -> Result<RmsValue> {
    quad.validate()?;
    let n = x.n();
    let (value, error) = match (&quad.rule, n) {
        (Rule::GaussCircle { order }, 2) => grid_rms(u, x, *order, *order),
        (Rule::ProductGauss { orders }, 2) if orders.len() == 2 => grid_rms(u, x, orders[0], orders[1]),
        (Rule::MonteCarlo { samples, seed }, _) => {
            let mut mv = MeanVar::default();
            let chunks = samples.div_ceil(crate::quadrature::MC_CHUNK);
            let mut left = *samples;
            for c in 0..chunks {
                let mut rng = chunk_rng(*seed, c as u64);
                for _ in 0..left.min(crate::quadrature::MC_CHUNK) {
                    let k1 = haar_sample_k(n, &mut rng);
                    let k2 = haar_sample_k(n, &mut rng);
                    mv.push(u(&x.left_k(&k1).right_k(&k2)).norm_sqr());
                }
                left = left.saturating_sub(crate::quadrature::MC_CHUNK);
            }
            let v = mv.mean().max(0.0).sqrt();
            let err = if v > 0.0 { mv.std_error() / (2.0 * v) } else { mv.std_error().sqrt() };
            (v, err)
        }
        _ => {
            return Err(Error::Unsupported {
                op: "rms_average",
                what: format!("rule {} on SL({n}, R)", quad.fingerprint()),
            })
        }
    };
    Ok(RmsValue {
        value,
        error,
        flagged: quad.is_flagged(value, error),
    })
}

fn grid_rms(u: &(dyn Fn(&GroupElement) -> Complex64 + Sync), x: &GroupElement, na: usize, nb: usize) -> (f64, f64) {
    use rayon::prelude::*;
    let xm = sl2::from_dmatrix(x.matrix());
    let rows: Vec<Vec<f64>> = (0..na)
        .into_par_iter()
        .map(|i| {
            let ka = sl2::rot(2.0 * PI * i as f64 / na as f64);
            (0..nb)
                .map(|j| {
                    let kb = sl2::rot(2.0 * PI * j as f64 / nb as f64);
                    let g = GroupElement::new(sl2::to_dmatrix(&(ka * xm * kb))).expect("rotations preserve det");
                    u(&g).norm_sqr()
                })
                .collect()
        })
        .collect();
    let fine: f64 = rows.iter().flatten().sum::<f64>() / (na * nb) as f64;
    let (ha, hb) = (na.div_ceil(2), nb.div_ceil(2));
    let coarse: f64 = if na % 2 == 0 && nb % 2 == 0 {
        rows.iter()
            .step_by(2)
            .flat_map(|r| r.iter().step_by(2))
            .sum::<f64>()
            / (ha * hb) as f64
    } else {
        fine
    };
    let v = fine.max(0.0).sqrt();
    (v, (v - coarse.max(0.0).sqrt()).abs())
}

/// A norm or pairing value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub error: f64,
    pub flagged: bool,
}

/// Radial and angular Gauss orders and the K-rule used for integrals over
/// `G` of bi-invariant integrands.
struct GRule {
    radial: usize,
    angular: usize,
    k_quad: QuadratureSpec,
}

fn g_rule(quad: &QuadratureSpec) -> GRule {
    match &quad.rule {
        Rule::ProductGauss { orders } => GRule {
            radial: orders[0],
            angular: orders.get(1).copied().unwrap_or(orders[0]),
            k_quad: QuadratureSpec {
                rule: Rule::GaussCircle {
                    order: orders.get(2).copied().unwrap_or(crate::quadrature::DEFAULT_CIRCLE_ORDER),
                },
                ..quad.clone()
            },
        },
        Rule::MonteCarlo { .. } => GRule {
            radial: 16,
            angular: 16,
            k_quad: quad.clone(),
        },
        Rule::GaussCircle { .. } => GRule {
            radial: 24,
            angular: 24,
            k_quad: quad.clone(),
        },
    }
}

/// `int_G F(radius) phi_lambda dx` for a bi-invariant integrand given by
/// its value at each Cartan radius, with breaks where `F` has kinks.
pub fn integrate_against_phi(
    rs: &RootSystem,
    lambda: &SpectralParam,
    radial_fn: &(dyn Fn(f64) -> f64 + Sync),
    breaks: &[f64],
    quad: &QuadratureSpec,
) -> Result<NormValue> {
    quad.validate()?;
    if breaks.is_empty() {
        return Ok(NormValue {
            value: 0.0,
            error: 0.0,
            flagged: false,
        });
    }
    let rule = g_rule(quad);
    let run = |radial: usize, angular: usize| -> Result<(f64, f64)> {
        let nodes = chamber_rule_split(rs, breaks, radial, angular)?;
        let mut acc = 0.0;
        let mut err = 0.0;
        for node in &nodes {
            let r = node.ambient.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let fr = radial_fn(r);
            if fr == 0.0 {
                continue;
            }
            let phi = KIntegrator::new(rs, &exp_frame(rs, &node.h)?, &rule.k_quad)?.eval(lambda);
            acc += node.weight * fr * phi.value.re;
            err += node.weight * fr.abs() * phi.quad_error;
        }
        Ok((acc, err))
    };
    let (fine, phi_err) = run(rule.radial, rule.angular)?;
    let (coarse, _) = run((rule.radial * 2 / 3).max(1), (rule.angular * 2 / 3).max(1))?;
    let error = phi_err + (fine - coarse).abs();
    Ok(NormValue {
        value: fine,
        error,
        flagged: quad.is_flagged(fine, error),
    })
}

/// `||f||_(lambda) = int_G (A f)(x) phi_lambda(x) dx`.
pub fn lambda_norm(rs: &RootSystem, f: &TestFunction, lambda: &SpectralParam, quad: &QuadratureSpec) -> Result<NormValue> {
    check_group(rs, f)?;
    lambda.require_real()?;
    integrate_against_phi(rs, lambda, &|r| f.rms_at(r), &f.breakpoints(), quad)
}

/// `int_G f(x) phi_lambda(x) dx`; only the bi-invariant part of `f`
/// survives the `K x K` average.
pub fn pairing_with_phi(rs: &RootSystem, f: &TestFunction, lambda: &SpectralParam, quad: &QuadratureSpec) -> Result<NormValue> {
    check_group(rs, f)?;
    let radial = |r: f64| -> f64 {
        let mut acc = 0.0;
        for c in f.components() {
            for t in &c.terms {
                if t.m == 0 && t.n == 0 {
                    acc += t.coeff.re * c.profile.eval(r);
                }
            }
        }
        acc
    };
    integrate_against_phi(rs, lambda, &radial, &f.breakpoints(), quad)
}

fn check_group(rs: &RootSystem, f: &TestFunction) -> Result<()> {
    if rs.group_size() != Some(f.group_n()) {
        return Err(Error::DimensionMismatch {
            expected: rs.group_size().unwrap_or(0),
            got: f.group_n(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests;
