//! Startup self-test fixing the sign conventions of the integral formula.
//!
//! A convention is accepted when
//! 1. `phi_rho = 1` on an `SL(2)` test set,
//! 2. `phi_lambda = phi_{w lambda}` on `A1` (circle rule) and on `A2`
//!    (paired Monte Carlo, within five standard errors),
//! 3. `phi_{t rho}` stays bounded by one for `|t| <= 1` and grows for
//!    `|t| = 3/2` along `a_T`.
//!
//! Candidates are tried in the order of [`Convention::candidates`]; the
//! first that passes every check is used.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::kint::{Convention, KIntegrator};
use crate::error::{Error, Result};
use crate::groups::{haar_sample_k, sl2, GroupElement};
use crate::quadrature::{chunk_rng, QuadratureSpec};
use crate::rootsys::{build_root_system, generate_weyl, RootSystem, SpectralParam};

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOutcome {
    pub convention: Convention,
    pub rho_is_one: bool,
    pub weyl_invariant: bool,
    pub bounded_exactly_in_hull: bool,
}

impl CandidateOutcome {
    pub fn passed(&self) -> bool {
        self.rho_is_one && self.weyl_invariant && self.bounded_exactly_in_hull
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub outcomes: Vec<CandidateOutcome>,
    pub chosen: Option<Convention>,
}

const CIRCLE_ORDER: usize = 256;
const MC_SAMPLES: usize = 4096;
const MC_SEED: u64 = 0xCA1;

fn sl2_elem(a: f64, t: f64, b: f64) -> GroupElement {
    GroupElement::new(sl2::to_dmatrix(&sl2::kak(a, t, b))).expect("kak is unimodular")
}

fn eval(rs: &RootSystem, x: &GroupElement, conv: Convention, quad: &QuadratureSpec, l: &SpectralParam) -> Result<f64> {
    Ok(KIntegrator::with_convention(rs, x, quad, conv)?.eval(l).value.re)
}

fn rho_is_one(sl2rs: &RootSystem, conv: Convention) -> Result<bool> {
    let quad = QuadratureSpec::gauss_circle(CIRCLE_ORDER);
    let rho = SpectralParam::rho_multiple(sl2rs, 1.0);
    for (a, t, b) in [(0.3, 0.5, -1.1), (-0.8, 1.5, 0.4), (1.2, 3.0, 2.0)] {
        if (eval(sl2rs, &sl2_elem(a, t, b), conv, &quad, &rho)? - 1.0).abs() > 1e-6 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn weyl_invariant(sl2rs: &RootSystem, sl3rs: &RootSystem, conv: Convention) -> Result<bool> {
    let quad = QuadratureSpec::gauss_circle(CIRCLE_ORDER);
    let lam = SpectralParam::rho_multiple(sl2rs, 0.6);
    let neg = lam.scaled(-1.0);
    for (a, t, b) in [(0.4, 1.3, 0.9), (-0.2, 2.5, 1.7)] {
        let x = sl2_elem(a, t, b);
        let k = KIntegrator::with_convention(sl2rs, &x, &quad, conv)?;
        let (p, q) = (k.eval(&lam).value.re, k.eval(&neg).value.re);
        if (p - q).abs() > 1e-6 * p.abs().max(1.0) {
            return Ok(false);
        }
    }

    let w = generate_weyl(sl3rs)?;
    let mut rng = chunk_rng(MC_SEED, 1 << 20);
    let k1: DMatrix<f64> = haar_sample_k(3, &mut rng);
    let k2: DMatrix<f64> = haar_sample_k(3, &mut rng);
    let x = GroupElement::from_cartan(&k1, &[1.0, 0.2, -1.2], &k2)?;
    let quad = QuadratureSpec::monte_carlo(MC_SAMPLES, MC_SEED);
    let k = KIntegrator::with_convention(sl3rs, &x, &quad, conv)?;
    let lam = SpectralParam::from_dual(sl3rs, &[0.7, 0.2], &[0.0, 0.0])?;
    for &g in w.generators() {
        let d = k.eval_difference(&lam, &lam.apply(&w.elements()[g]));
        if d.value.norm() > 5.0 * d.quad_error {
            return Ok(false);
        }
    }
    Ok(true)
}

fn bounded_exactly_in_hull(sl2rs: &RootSystem, conv: Convention) -> Result<bool> {
    let quad = QuadratureSpec::gauss_circle(CIRCLE_ORDER);
    let at = |t: f64| sl2_elem(0.0, t, 0.0);
    for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let l = SpectralParam::rho_multiple(sl2rs, t);
        for big_t in [2.0, 4.0, 8.0] {
            if eval(sl2rs, &at(big_t), conv, &quad, &l)?.abs() > 1.0 + 1e-6 {
                return Ok(false);
            }
        }
    }
    for t in [-1.5, 1.5] {
        let l = SpectralParam::rho_multiple(sl2rs, t);
        let (v4, v8) = (eval(sl2rs, &at(4.0), conv, &quad, &l)?, eval(sl2rs, &at(8.0), conv, &quad, &l)?);
        if !(v8 > 2.0 * v4 && v8 > 1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn run() -> Result<CalibrationReport> {
    let sl2rs = build_root_system("sl(2,R)")?;
    let sl3rs = build_root_system("sl(3,R)")?;
    let mut outcomes = Vec::new();
    let mut chosen = None;
    for conv in Convention::candidates() {
        let outcome = CandidateOutcome {
            convention: conv,
            rho_is_one: rho_is_one(&sl2rs, conv)?,
            weyl_invariant: weyl_invariant(&sl2rs, &sl3rs, conv)?,
            bounded_exactly_in_hull: bounded_exactly_in_hull(&sl2rs, conv)?,
        };
        if chosen.is_none() && outcome.passed() {
            chosen = Some(conv);
        }
        outcomes.push(outcome);
    }
    Ok(CalibrationReport { outcomes, chosen })
}

/// Result of the self-test, computed once per process.
pub fn calibration_report() -> &'static Result<CalibrationReport> {
    static REPORT: OnceLock<Result<CalibrationReport>> = OnceLock::new();
    REPORT.get_or_init(run)
}

/// The calibrated convention; an error if no candidate passed.
pub fn convention() -> Result<Convention> {
    match calibration_report() {
        Ok(r) => r.chosen.ok_or_else(|| {
            Error::Calibration(
                r.outcomes
                    .iter()
                    .map(|o| {
                        format!(
                            "{}: rho {}, weyl {}, bounded {}",
                            o.convention.describe(),
                            o.rho_is_one,
                            o.weyl_invariant,
                            o.bounded_exactly_in_hull
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        }),
        Err(e) => Err(e.clone()),
    }
}
