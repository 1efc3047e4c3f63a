//! Convolution over `G` by Monte Carlo, the pointwise and integrated
//! submultiplicativity checks, and the eigenfunction residual of `phi`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{check_group, lambda_norm, TestFunction, MAX_DEGREE, SPAN};
use crate::error::{Error, Result};
use crate::groups::{cartan_radius, chamber_rule_split, haar_sample_k, sl2, GroupElement};
use crate::quadrature::{chunk_rng, gauss_legendre_on, CircleRule, MeanVar, QuadratureSpec, Rule, DEFAULT_CIRCLE_ORDER};
use crate::rootsys::{RootSystem, SpectralParam};
use crate::spherical::{exp_frame, KIntegrator, Residual};

/// Number of independent sample batches used by the jackknife.
pub const JACKKNIFE_BATCHES: usize = 20;

/// A Monte Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvValue {
    pub value: Complex64,
    pub sigma: f64,
}

/// A point `y` of `{radius <= r}` drawn with density proportional to Haar
/// measure there, or rejected (weight zero) on larger groups.
struct Draw {
    y: GroupElement,
    /// Cartan coordinates on `SL(2)`; the radius alone otherwise.
    coords: (f64, f64, f64),
    weight: f64,
}

/// Samples from the ball of Cartan radius `r`, `volume(r)` being the
/// normalising factor of the estimator.
struct BallSampler {
    n: usize,
    r: f64,
    rs: Option<RootSystem>,
}

impl BallSampler {
    fn new(n: usize, r: f64) -> Result<Self> {
        let rs = if n == 2 {
            None
        } else {
            Some(crate::rootsys::build_root_system(&format!("sl({n},R)"))?)
        };
        Ok(BallSampler { n, r, rs })
    }

    /// Haar volume on `SL(2)`, the volume of the sampling box otherwise.
    fn volume(&self) -> f64 {
        match &self.rs {
            None => 2f64.sqrt() * ((2.0 * self.r).cosh() - 1.0) / 2.0,
            Some(rs) => (2.0 * self.box_half(rs)).powi(rs.rank() as i32),
        }
    }

    fn box_half(&self, rs: &RootSystem) -> f64 {
        // the frame norm is the ambient 2-norm, bounded by sqrt(n) times the radius
        (rs.rank() as f64 + 1.0).sqrt() * self.r
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        match &self.rs {
            None => {
                let c = 1.0 + rng.random::<f64>() * ((2.0 * self.r).cosh() - 1.0);
                let t = 0.5 * c.acosh();
                let a = rng.random::<f64>() * TAU;
                let b = rng.random::<f64>() * TAU;
                let y = GroupElement::new(sl2::to_dmatrix(&sl2::kak(a, t, b))).expect("kak is unimodular");
                Draw {
                    y,
                    coords: (a, t, b),
                    weight: 1.0,
                }
            }
            Some(rs) => {
                let half = self.box_half(rs);
                let h = nalgebra::DVector::from_fn(rs.rank(), |_, _| rng.random_range(-half..half));
                let k = haar_sample_k(self.n, rng);
                let amb = rs.from_frame(&h);
                let radius = amb.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let inside = rs.in_closed_chamber(&h, 0.0) && radius <= self.r;
                let weight = if inside {
                    crate::groups::haar_density(rs, &h).unwrap_or(0.0)
                } else {
                    0.0
                };
                let y = GroupElement::exp_diag(&amb).expect("diagonal exponential").left_k(&k);
                Draw {
                    y,
                    coords: (0.0, radius, 0.0),
                    weight,
                }
            }
        }
    }
}

/// Per-batch sample counts summing to `total`.
fn batch_sizes(total: usize, batches: usize) -> Vec<usize> {
    (0..batches)
        .map(|b| total / batches + usize::from(b < total % batches))
        .collect()
}

/// `(f * g)(x) = int_G f(y) g(y^-1 x) dy` for an arbitrary callable `g`.
///
/// `y` is drawn from the support of `f`; the estimate is exactly zero when
/// `f` vanishes.
pub fn convolve_with(
    f: &TestFunction,
    g: &(dyn Fn(&GroupElement) -> Complex64 + Sync),
    x: &GroupElement,
    samples: usize,
    seed: u64,
) -> Result<ConvValue> {
    if x.n() != f.group_n() {
        return Err(Error::DimensionMismatch {
            expected: f.group_n(),
            got: x.n(),
        });
    }
    if samples < 2 {
        return Err(Error::InvalidQuadrature("convolution needs at least two samples".into()));
    }
    if f.is_zero() {
        return Ok(ConvValue {
            value: Complex64::new(0.0, 0.0),
            sigma: 0.0,
        });
    }
    let sampler = BallSampler::new(f.group_n(), f.support_radius())?;
    let vol = sampler.volume();
    let parts: Vec<(MeanVar, MeanVar)> = batch_sizes(samples, JACKKNIFE_BATCHES)
        .into_par_iter()
        .enumerate()
        .map(|(b, count)| {
            let mut rng = chunk_rng(seed, b as u64);
            let (mut re, mut im) = (MeanVar::default(), MeanVar::default());
            for _ in 0..count {
                let d = sampler.draw(&mut rng);
                let v = if d.weight == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let fy = f.eval(&d.y);
                    if fy == Complex64::new(0.0, 0.0) {
                        fy
                    } else {
                        fy * g(&(&d.y.inverse() * x)) * d.weight
                    }
                };
                re.push(v.re);
                im.push(v.im);
            }
            (re, im)
        })
        .collect();
    let (mut re, mut im) = (MeanVar::default(), MeanVar::default());
    for (a, b) in &parts {
        re.merge(a);
        im.merge(b);
    }
    Ok(ConvValue {
        value: Complex64::new(re.mean(), im.mean()) * vol,
        sigma: vol * re.std_error().hypot(im.std_error()),
    })
}

/// `(f * g)(x)` for test functions; zero without sampling when `x` lies
/// outside the product of the supports.
pub fn convolve(f: &TestFunction, g: &TestFunction, x: &GroupElement, quad: &QuadratureSpec) -> Result<ConvValue> {
    if f.group_n() != g.group_n() {
        return Err(Error::DimensionMismatch {
            expected: f.group_n(),
            got: g.group_n(),
        });
    }
    let (samples, seed) = match quad.rule {
        Rule::MonteCarlo { samples, seed } => (samples, seed),
        _ => {
            return Err(Error::Unsupported {
                op: "convolve",
                what: format!("rule {}", quad.fingerprint()),
            })
        }
    };
    if x.n() == f.group_n() && cartan_radius(x) > f.support_radius() + g.support_radius() {
        return Ok(ConvValue {
            value: Complex64::new(0.0, 0.0),
            sigma: 0.0,
        });
    }
    convolve_with(f, &|z| g.eval(z), x, samples, seed)
}

/// Batch sums behind `A(f*g)(x)` and `(Af * Ag)(x)` on shared samples.
struct ConvBatches {
    /// `sum_i Fhat_i[m] Ghat_i[n]` per batch, row-major `SPAN x SPAN`.
    coeff: Vec<Vec<Complex64>>,
    rhs: Vec<f64>,
    counts: Vec<usize>,
    volume: f64,
}

impl ConvBatches {
    fn collect(f: &TestFunction, g: &TestFunction, x: &GroupElement, samples: usize, seed: u64) -> Result<Self> {
        let sampler = BallSampler::new(f.group_n(), f.support_radius())?;
        let counts = batch_sizes(samples, JACKKNIFE_BATCHES);
        let sl2_case = f.group_n() == 2;
        let parts: Vec<(Vec<Complex64>, f64)> = counts
            .par_iter()
            .enumerate()
            .map(|(b, &count)| {
                let mut rng = chunk_rng(seed, b as u64);
                let mut coeff = vec![Complex64::new(0.0, 0.0); SPAN * SPAN];
                let mut rhs = 0.0;
                let (mut fl, mut gr) = ([Complex64::new(0.0, 0.0); SPAN], [Complex64::new(0.0, 0.0); SPAN]);
                for _ in 0..count {
                    let d = sampler.draw(&mut rng);
                    if d.weight == 0.0 {
                        continue;
                    }
                    let (a, t, c) = d.coords;
                    let af = f.rms_at(t);
                    if af == 0.0 {
                        continue;
                    }
                    let z = &d.y.inverse() * x;
                    let (za, zt, zc) = if sl2_case {
                        sl2::cartan(&sl2::from_dmatrix(z.matrix()))
                    } else {
                        (0.0, cartan_radius(&z), 0.0)
                    };
                    let ag = g.rms_at(zt);
                    if ag == 0.0 {
                        continue;
                    }
                    rhs += d.weight * af * ag;
                    if sl2_case {
                        f.left_fourier(a, t, c, &mut fl);
                        g.right_fourier(za, zt, zc, &mut gr);
                    } else {
                        fl.fill(Complex64::new(0.0, 0.0));
                        gr.fill(Complex64::new(0.0, 0.0));
                        fl[MAX_DEGREE as usize] = f.eval_radial(t);
                        gr[MAX_DEGREE as usize] = g.eval_radial(zt);
                    }
                    for (m, fm) in fl.iter().enumerate() {
                        if *fm == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let fw = fm * d.weight;
                        for (n, gn) in gr.iter().enumerate() {
                            coeff[m * SPAN + n] += fw * gn;
                        }
                    }
                }
                (coeff, rhs)
            })
            .collect();
        let (coeff, rhs) = parts.into_iter().unzip();
        Ok(ConvBatches {
            coeff,
            rhs,
            counts,
            volume: sampler.volume(),
        })
    }

    /// `(A(f*g)(x), (Af*Ag)(x))` leaving out batch `skip`.
    fn estimate(&self, skip: Option<usize>) -> (f64, f64) {
        let mut c = vec![Complex64::new(0.0, 0.0); SPAN * SPAN];
        let (mut rhs, mut count) = (0.0, 0usize);
        for b in 0..self.coeff.len() {
            if Some(b) == skip {
                continue;
            }
            for (acc, v) in c.iter_mut().zip(&self.coeff[b]) {
                *acc += v;
            }
            rhs += self.rhs[b];
            count += self.counts[b];
        }
        let scale = self.volume / count as f64;
        let lhs = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() * scale;
        (lhs, rhs * scale)
    }

    fn full_and_leave_one_out(&self) -> ((f64, f64), Vec<(f64, f64)>) {
        (self.estimate(None), (0..self.coeff.len()).map(|b| self.estimate(Some(b))).collect())
    }
}

/// Jackknife standard error from leave-one-out estimates.
fn jackknife_sigma(loo: &[f64]) -> f64 {
    let b = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / b;
    ((b - 1.0) / b * loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmultRow {
    pub radius: f64,
    /// `A(f*g)(x)`.
    pub lhs: f64,
    /// `(Af * Ag)(x)`.
    pub rhs: f64,
    /// Standard error of `rhs - lhs`.
    pub sigma: f64,
}

impl SubmultRow {
    pub fn holds(&self, sigmas: f64) -> bool {
        self.lhs <= self.rhs + sigmas * self.sigma + 1e-12 * self.rhs.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubmultReport {
    pub rows: Vec<SubmultRow>,
    /// `||f*g||_(lambda)` with its standard error.
    pub conv_norm: f64,
    pub conv_norm_sigma: f64,
    /// `||f||_(lambda) ||g||_(lambda)`.
    pub product_norm: f64,
    pub product_norm_error: f64,
    pub flagged: bool,
}

impl SubmultReport {
    pub fn pointwise_holds(&self, sigmas: f64) -> bool {
        self.rows.iter().all(|r| r.holds(sigmas))
    }

    pub fn norm_holds(&self, sigmas: f64) -> bool {
        self.conv_norm <= self.product_norm + sigmas * self.conv_norm_sigma + self.product_norm_error
    }
}

/// Compares `A(f*g) <= Af * Ag` at `points` random elements inside the
/// joint support, and `||f*g|| <= ||f|| ||g||` for the real parameter
/// `lambda`, all convolutions sharing the samples of `mc`.
pub fn submultiplicativity_report(
    rs: &RootSystem,
    f: &TestFunction,
    g: &TestFunction,
    lambda: &SpectralParam,
    points: usize,
    mc: &QuadratureSpec,
    phi_quad: &QuadratureSpec,
) -> Result<SubmultReport> {
    check_group(rs, f)?;
    check_group(rs, g)?;
    lambda.require_real()?;
    let (samples, seed) = match mc.rule {
        Rule::MonteCarlo { samples, seed } if samples >= 2 * JACKKNIFE_BATCHES => (samples, seed),
        _ => {
            return Err(Error::InvalidQuadrature(format!(
                "submultiplicativity needs a Monte Carlo rule with at least {} samples",
                2 * JACKKNIFE_BATCHES
            )))
        }
    };
    let n = f.group_n();
    let reach = f.support_radius() + g.support_radius();

    let mut rows = Vec::with_capacity(points);
    if !f.is_zero() && !g.is_zero() {
        let mut rng = chunk_rng(seed ^ 0x5AB5_5AB5, 0);
        for _ in 0..points {
            let x = GroupElement::random(n, reach, &mut rng);
            let batches = ConvBatches::collect(f, g, &x, samples, seed)?;
            let ((lhs, rhs), loo) = batches.full_and_leave_one_out();
            let diffs: Vec<f64> = loo.iter().map(|(l, r)| r - l).collect();
            rows.push(SubmultRow {
                radius: cartan_radius(&x),
                lhs,
                rhs,
                sigma: jackknife_sigma(&diffs),
            });
        }
    }

    let nf = lambda_norm(rs, f, lambda, phi_quad)?;
    let ng = lambda_norm(rs, g, lambda, phi_quad)?;
    let (conv_norm, conv_norm_sigma, conv_flag) = if f.is_zero() || g.is_zero() {
        (0.0, 0.0, false)
    } else {
        conv_norm(rs, f, g, lambda, samples, seed, phi_quad)?
    };
    let product_norm = nf.value * ng.value;
    let product_norm_error = nf.error * ng.value.abs() + ng.error * nf.value.abs();
    Ok(SubmultReport {
        rows,
        conv_norm,
        conv_norm_sigma,
        product_norm,
        product_norm_error,
        flagged: nf.flagged || ng.flagged || conv_flag,
    })
}

/// `||f*g||_(lambda)` by a Gauss rule over the chamber whose node values
/// `A(f*g)` are Monte Carlo estimates on shared samples. The standard
/// error combines the jackknife spread with the difference to a coarser
/// radial rule.
fn conv_norm(
    rs: &RootSystem,
    f: &TestFunction,
    g: &TestFunction,
    lambda: &SpectralParam,
    samples: usize,
    seed: u64,
    phi_quad: &QuadratureSpec,
) -> Result<(f64, f64, bool)> {
    let reach = f.support_radius() + g.support_radius();
    let (fine_order, coarse_order) = if rs.rank() == 1 { (24, 16) } else { (6, 4) };
    let run = |order: usize| -> Result<(f64, Vec<f64>, bool)> {
        let nodes = chamber_rule_split(rs, &[0.5 * reach, reach], order, order)?;
        let mut total = 0.0;
        let mut loo_total = vec![0.0; JACKKNIFE_BATCHES];
        let mut flagged = false;
        for node in &nodes {
            let x = exp_frame(rs, &node.h)?;
            let phi = KIntegrator::new(rs, &x, phi_quad)?.eval(lambda);
            flagged |= phi.flagged;
            let w = node.weight * phi.value.re;
            let batches = ConvBatches::collect(f, g, &x, samples, seed)?;
            let ((lhs, _), loo) = batches.full_and_leave_one_out();
            total += w * lhs;
            for (acc, (l, _)) in loo_total.iter_mut().zip(&loo) {
                *acc += w * l;
            }
        }
        Ok((total, loo_total, flagged))
    };
    let (fine, loo, flag_a) = run(fine_order)?;
    let (coarse, _, flag_b) = run(coarse_order)?;
    let sigma = jackknife_sigma(&loo).hypot(fine - coarse);
    Ok((fine, sigma, flag_a || flag_b))
}

/// `|(f * phi_lambda)(x) - (f * phi_lambda)(e) phi_lambda(x)|` on `SL(2)` for
/// a bi-invariant `f`, by deterministic quadrature:
/// `(f * phi)(x) = int sqrt2 sinh 2t f(t) int_K phi(a_-t k^-1 x) dk dt`.
pub fn eigenfunction_residual(
    rs: &RootSystem,
    f: &TestFunction,
    lambda: &SpectralParam,
    x: &GroupElement,
    quad: &QuadratureSpec,
) -> Result<Residual> {
    check_group(rs, f)?;
    if f.group_n() != 2 {
        return Err(Error::Unsupported {
            op: "eigenfunction_residual",
            what: format!("SL({}, R)", f.group_n()),
        });
    }
    if !f.is_k_bi_invariant() {
        return Err(Error::InvalidTestFunction("the eigenfunction check needs a K-bi-invariant f".into()));
    }
    let circle = match &quad.rule {
        Rule::GaussCircle { order } => *order,
        Rule::ProductGauss { orders } => orders.get(1).copied().unwrap_or(DEFAULT_CIRCLE_ORDER),
        Rule::MonteCarlo { .. } => {
            return Err(Error::Unsupported {
                op: "eigenfunction_residual",
                what: "Monte Carlo rules".into(),
            })
        }
    };
    let radial_order = match &quad.rule {
        Rule::ProductGauss { orders } => orders[0],
        _ => 24,
    };
    if f.is_zero() {
        return Ok(Residual {
            value: 0.0,
            quad_error: 0.0,
            flagged: false,
        });
    }
    let k_quad = QuadratureSpec::gauss_circle(circle).with_tolerance(quad.tolerance);
    let phi_of = |m: &nalgebra::Matrix2<f64>| -> Result<(Complex64, f64)> {
        let v = KIntegrator::new(rs, &GroupElement::new(sl2::to_dmatrix(m))?, &k_quad)?.eval(lambda);
        Ok((v.value, v.quad_error))
    };
    let xm = sl2::from_dmatrix(x.matrix());
    let (a, s, _) = sl2::cartan(&xm);
    let radial_f = |t: f64| -> f64 {
        f.components()
            .iter()
            .map(|c| c.terms.iter().map(|u| u.coeff.re).sum::<f64>() * c.profile.eval(t))
            .sum()
    };

    // returns (f*phi)(x), (f*phi)(e) and the accumulated inner error
    let run = |order: usize, coarse_circle: bool| -> Result<(Complex64, Complex64, f64)> {
        let mut lo = 0.0;
        let mut nodes = Vec::new();
        for b in f.breakpoints() {
            nodes.extend(gauss_legendre_on(order, lo, b));
            lo = b;
        }
        let per: Vec<Result<(Complex64, Complex64, f64)>> = nodes
            .par_iter()
            .map(|&(t, w)| {
                let ft = radial_f(t);
                if ft == 0.0 {
                    return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0));
                }
                let dens = 2f64.sqrt() * (2.0 * t).sinh() * w * ft;
                let (pe, ee) = phi_of(&sl2::a(t))?;
                let (fine, coarse) = CircleRule::graded_pair(circle, a, (-2.0 * s.min(t)).exp());
                let rule = if coarse_circle { coarse } else { fine };
                let mut acc = Complex64::new(0.0, 0.0);
                let mut err = 0.0;
                for (th, wt) in rule.iter() {
                    let (p, e) = phi_of(&(sl2::a(-t) * sl2::rot(-th) * xm))?;
                    acc += p * wt;
                    err += e * wt;
                }
                Ok((acc * dens, pe * dens, (err + ee) * dens.abs()))
            })
            .collect();
        let mut out = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
        for r in per {
            let (u, v, e) = r?;
            out.0 += u;
            out.1 += v;
            out.2 += e;
        }
        Ok(out)
    };
    let (fx, fe, inner_err) = run(radial_order, false)?;
    let (cx, ce, _) = run((radial_order * 2 / 3).max(1), true)?;
    let (px, px_err) = phi_of(&xm)?;
    let value = (fx - fe * px).norm();
    let err_fx = (fx - cx).norm() + inner_err;
    let err_fe = (fe - ce).norm() + inner_err;
    let quad_error = err_fx + err_fe * px.norm() + fe.norm() * px_err;
    Ok(Residual {
        value,
        quad_error,
        flagged: !(quad_error <= quad.tolerance.max(1e-12) * fx.norm().max(1.0)),
    })
}
