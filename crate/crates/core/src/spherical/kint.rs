use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{haar_sample_k, iwasawa_h3, iwasawa_h_into, sl2, GroupElement};
use crate::quadrature::{chunk_rng, CircleRule, MeanVar, QuadratureSpec, Rule, MC_CHUNK};
use crate::rootsys::{RootSystem, SpectralParam};

/// Which exponent and which Iwasawa argument the K-integral uses:
/// `int_K exp((s_l lambda + s_r rho)(H(arg))) dk`, with `arg = x^-1 k` when
/// `inverse` and `arg = x k` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Convention {
    pub lambda_sign: i8,
    pub rho_sign: i8,
    pub inverse: bool,
}

impl Convention {
    /// `exp(-(lambda - rho)(H(x^-1 k)))`, the formula as usually quoted.
    pub const LITERAL: Convention = Convention {
        lambda_sign: -1,
        rho_sign: 1,
        inverse: true,
    };

    /// All sign and argument choices, in the order they are tried.
    pub fn candidates() -> Vec<Convention> {
        let mut out = vec![
            Self::LITERAL,
            Convention {
                lambda_sign: -1,
                rho_sign: -1,
                inverse: true,
            },
        ];
        for inverse in [true, false] {
            for lambda_sign in [-1, 1] {
                for rho_sign in [-1, 1] {
                    let c = Convention {
                        lambda_sign,
                        rho_sign,
                        inverse,
                    };
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        let l = if self.lambda_sign < 0 { "-lambda" } else { "lambda" };
        let r = if self.rho_sign < 0 { "- rho" } else { "+ rho" };
        let arg = if self.inverse { "x^-1 k" } else { "x k" };
        format!("exp(({l} {r})(H({arg})))")
    }
}

/// Value of a K-integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalValue {
    pub value: Complex64,
    pub quad_error: f64,
    /// Error estimate above the requested tolerance.
    pub flagged: bool,
}

impl SphericalValue {
    pub fn re(&self) -> f64 {
        self.value.re
    }
}

type SampleCache = Mutex<HashMap<(usize, usize, u64), Arc<Vec<f64>>>>;

/// Haar samples on `SO(n)`, column-major and concatenated. Sample `i` comes
/// from stream `i / MC_CHUNK`; sets are cached per `(n, count, seed)`.
pub fn k_samples(n: usize, count: usize, seed: u64) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<SampleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(n, count, seed)) {
        return hit.clone();
    }
    let chunks = count.div_ceil(MC_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c as u64);
            let len = MC_CHUNK.min(count - c * MC_CHUNK);
            let mut out = Vec::with_capacity(len * n * n);
            for _ in 0..len {
                out.extend_from_slice(haar_sample_k(n, &mut rng).as_slice());
            }
            out
        })
        .collect();
    let all = Arc::new(parts.concat());
    let mut guard = cache.lock().unwrap();
    // keep memory bounded for long scans over many seeds
    if guard.len() > 16 {
        guard.clear();
    }
    guard.insert((n, count, seed), all.clone());
    all
}

#[derive(Debug, Clone)]
struct NodeSet {
    /// Frame coordinates of `H(arg)`, `rank` entries per node.
    h: Vec<f64>,
    w: Vec<f64>,
}

/// Precomputed `H(arg)` over the K-nodes for one group element, so that
/// many parameters can be integrated against the same discretisation.
#[derive(Debug, Clone)]
pub struct KIntegrator {
    rank: usize,
    rho: DVector<f64>,
    conv: Convention,
    fine: NodeSet,
    /// Companion rule for the error estimate; `None` for Monte Carlo.
    coarse: Option<NodeSet>,
    tolerance: f64,
}

fn frame_of(e: &DMatrix<f64>, amb: &[f64], out: &mut Vec<f64>) {
    for j in 0..e.ncols() {
        let mut acc = 0.0;
        for (i, a) in amb.iter().enumerate() {
            acc += e[(i, j)] * a;
        }
        out.push(acc);
    }
}

impl KIntegrator {
    pub fn new(rs: &RootSystem, x: &GroupElement, quad: &QuadratureSpec) -> Result<Self> {
        Self::with_convention(rs, x, quad, super::convention()?)
    }

    pub fn with_convention(
        rs: &RootSystem,
        x: &GroupElement,
        quad: &QuadratureSpec,
        conv: Convention,
    ) -> Result<Self> {
        quad.validate()?;
        let n = x.n();
        if rs.group_size() != Some(n) {
            return Err(Error::DimensionMismatch {
                expected: rs.group_size().unwrap_or(0),
                got: n,
            });
        }
        let arg = if conv.inverse { x.inverse() } else { x.clone() };
        let e = rs.embedding();
        let (fine, coarse) = match (&quad.rule, n) {
            (Rule::GaussCircle { order }, 2) => {
                let m = sl2::from_dmatrix(x.matrix());
                let (th1, t, th2) = sl2::cartan(&m);
                let phase = if conv.inverse { th1 } else { -th2 };
                let delta = (-2.0 * t).exp();
                let a = sl2::from_dmatrix(arg.matrix());
                let build = |rule: CircleRule| {
                    let mut h = Vec::with_capacity(rule.len());
                    for &th in &rule.angles {
                        let s = sl2::iwasawa_s(&(a * sl2::rot(th)));
                        frame_of(e, &[s, -s], &mut h);
                    }
                    NodeSet { h, w: rule.weights }
                };
                let (fine, coarse) = CircleRule::graded_pair(*order, phase, delta);
                (build(fine), Some(build(coarse)))
            }
            (Rule::MonteCarlo { samples, seed }, _) => {
                let ks = k_samples(n, *samples, *seed);
                let h = Self::mc_nodes(e, arg.matrix(), &ks, n, *samples);
                (
                    NodeSet {
                        h,
                        w: vec![1.0 / *samples as f64; *samples],
                    },
                    None,
                )
            }
            (Rule::GaussCircle { .. }, _) => {
                return Err(Error::Unsupported {
                    op: "K-integration with a circle rule",
                    what: format!("SL({n}, R); use monte-carlo"),
                })
            }
            (Rule::ProductGauss { .. }, _) => {
                return Err(Error::Unsupported {
                    op: "K-integration",
                    what: "product-gauss rules".into(),
                })
            }
        };
        Ok(KIntegrator {
            rank: rs.rank(),
            rho: rs.rho().clone(),
            conv,
            fine,
            coarse,
            tolerance: quad.tolerance,
        })
    }

    fn mc_nodes(e: &DMatrix<f64>, a: &DMatrix<f64>, ks: &[f64], n: usize, count: usize) -> Vec<f64> {
        let nn = n * n;
        let parts: Vec<Vec<f64>> = ks
            .par_chunks(MC_CHUNK * nn)
            .map(|chunk| {
                let mut out = Vec::with_capacity(chunk.len() / nn * (n - 1));
                let mut amb = vec![0.0; n];
                if n == 3 {
                    let a3 = Matrix3::from_column_slice(a.as_slice());
                    for k in chunk.chunks(nn) {
                        let h = iwasawa_h3(&(a3 * Matrix3::from_column_slice(k)));
                        frame_of(e, &h, &mut out);
                    }
                } else {
                    for k in chunk.chunks(nn) {
                        let m = a * DMatrix::from_column_slice(n, n, k);
                        iwasawa_h_into(&m, &mut amb);
                        frame_of(e, &amb, &mut out);
                    }
                }
                out
            })
            .collect();
        let h = parts.concat();
        debug_assert_eq!(h.len(), count * (n - 1));
        h
    }

    pub fn convention(&self) -> Convention {
        self.conv
    }

    pub fn len(&self) -> usize {
        self.fine.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.w.is_empty()
    }

    /// Real and imaginary exponent vectors for `lambda`.
    fn exponents(&self, lambda: &SpectralParam) -> (Vec<f64>, Vec<f64>) {
        let sl = self.conv.lambda_sign as f64;
        let sr = self.conv.rho_sign as f64;
        let re: Vec<f64> = (0..self.rank)
            .map(|j| sl * lambda.re[j] + sr * self.rho[j])
            .collect();
        let im: Vec<f64> = (0..self.rank).map(|j| sl * lambda.im[j]).collect();
        (re, im)
    }

    #[inline]
    fn integrand(h: &[f64], re: &[f64], im: &[f64]) -> Complex64 {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..h.len() {
            a += re[j] * h[j];
            b += im[j] * h[j];
        }
        if b == 0.0 {
            Complex64::new(a.exp(), 0.0)
        } else {
            Complex64::from_polar(a.exp(), b)
        }
    }

    fn sum(&self, set: &NodeSet, terms: &[(f64, &[f64], &[f64])]) -> Complex64 {
        let r = self.rank;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, w) in set.w.iter().enumerate() {
            let h = &set.h[i * r..(i + 1) * r];
            let mut f = Complex64::new(0.0, 0.0);
            for (c, re, im) in terms {
                f += Self::integrand(h, re, im) * *c;
            }
            acc += f * *w;
        }
        acc
    }

    /// Integral of `sum_t c_t exp(...)` over K. Monte Carlo reductions run
    /// per chunk and merge in chunk order.
    fn integrate(&self, terms: &[(f64, &[f64], &[f64])]) -> SphericalValue {
        let (value, err) = match &self.coarse {
            Some(coarse) => {
                let fine = self.sum(&self.fine, terms);
                let c = self.sum(coarse, terms);
                (fine, (fine - c).norm())
            }
            None => {
                let r = self.rank;
                let parts: Vec<(MeanVar, MeanVar)> = self
                    .fine
                    .h
                    .par_chunks(MC_CHUNK * r)
                    .map(|chunk| {
                        let (mut mr, mut mi) = (MeanVar::default(), MeanVar::default());
                        for h in chunk.chunks(r) {
                            let mut f = Complex64::new(0.0, 0.0);
                            for (c, re, im) in terms {
                                f += Self::integrand(h, re, im) * *c;
                            }
                            mr.push(f.re);
                            mi.push(f.im);
                        }
                        (mr, mi)
                    })
                    .collect();
                let (mut mr, mut mi) = (MeanVar::default(), MeanVar::default());
                for (a, b) in &parts {
                    mr.merge(a);
                    mi.merge(b);
                }
                (
                    Complex64::new(mr.mean(), mi.mean()),
                    mr.std_error().hypot(mi.std_error()),
                )
            }
        };
        SphericalValue {
            value,
            quad_error: err,
            flagged: !(err <= self.tolerance * value.norm().max(1.0)),
        }
    }

    pub fn eval(&self, lambda: &SpectralParam) -> SphericalValue {
        let (re, im) = self.exponents(lambda);
        self.integrate(&[(1.0, &re, &im)])
    }

    pub fn eval_many(&self, lambdas: &[SpectralParam]) -> Vec<SphericalValue> {
        lambdas.iter().map(|l| self.eval(l)).collect()
    }

    /// `phi_lambda - phi_mu` integrated as one integrand, so Monte Carlo
    /// noise common to both cancels in the error bar.
    pub fn eval_difference(&self, lambda: &SpectralParam, mu: &SpectralParam) -> SphericalValue {
        let (re1, im1) = self.exponents(lambda);
        let (re2, im2) = self.exponents(mu);
        self.integrate(&[(1.0, &re1, &im1), (-1.0, &re2, &im2)])
    }
}
