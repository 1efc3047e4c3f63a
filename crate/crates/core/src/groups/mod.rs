//! Concrete `SL(n, R)`: arithmetic, the Iwasawa and Cartan decompositions,
//! the Haar density on the positive chamber and Haar sampling on `SO(n)`.

mod haar;
pub mod sl2;

pub use haar::{chamber_rule, chamber_rule_split, haar_density, haar_sample_k, radius_of, ChamberNode};

use std::ops::Mul;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on `|det - 1|` for accepted elements.
pub const DET_TOL: f64 = 1e-9;
/// Elements with a larger condition number are rejected by the
/// decompositions.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    m: DMatrix<f64>,
}

impl GroupElement {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let det = m.determinant();
        if !((det - 1.0).abs() < DET_TOL) {
            return Err(Error::NotUnimodular { n, det });
        }
        Ok(GroupElement { m })
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    /// Wraps a product of valid elements without re-checking the determinant.
    fn trusted(m: DMatrix<f64>) -> Self {
        GroupElement { m }
    }

    pub fn identity(n: usize) -> Self {
        Self::trusted(DMatrix::identity(n, n))
    }

    /// `exp` of the trace-zero diagonal `h`.
    pub fn exp_diag(h: &[f64]) -> Result<Self> {
        let s: f64 = h.iter().sum();
        if s.abs() > DET_TOL {
            return Err(Error::NotUnimodular { n: h.len(), det: s.exp() });
        }
        Ok(Self::trusted(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            h.len(),
            h.iter().map(|x| x.exp()),
        ))))
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::trusted(DMatrix::from_row_slice(2, 2, &[c, -s, s, c]))
    }

    /// `k1 exp(h) k2`.
    pub fn from_cartan(k1: &DMatrix<f64>, h: &[f64], k2: &DMatrix<f64>) -> Result<Self> {
        let a = Self::exp_diag(h)?;
        Self::new(k1 * a.m * k2)
    }

    /// Random element `k1 exp(H) k2` with Haar `k1, k2` and Cartan radius
    /// uniform in `[0, radius]`.
    pub fn random<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Self {
        let k1 = haar_sample_k(n, rng);
        let k2 = haar_sample_k(n, rng);
        let h = random_chamber_vector(n, radius * rng.random::<f64>(), rng);
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, h.iter().map(|x| x.exp())));
        Self::trusted(k1 * a * k2)
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn inverse(&self) -> Self {
        let n = self.n();
        if n == 2 {
            let m = &self.m;
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            return Self::trusted(
                DMatrix::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]]) / det,
            );
        }
        let inv = self
            .m
            .clone()
            .try_inverse()
            .expect("elements of SL(n) are invertible");
        Self::trusted(inv)
    }

    pub fn transpose(&self) -> Self {
        Self::trusted(self.m.transpose())
    }

    /// Left multiplication by a rotation or other orthogonal matrix.
    pub fn left_k(&self, k: &DMatrix<f64>) -> Self {
        Self::trusted(k * &self.m)
    }

    pub fn right_k(&self, k: &DMatrix<f64>) -> Self {
        Self::trusted(&self.m * k)
    }

    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.m - &other.m).amax()
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement::trusted(&self.m * &rhs.m)
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: GroupElement) -> GroupElement {
        &self * &rhs
    }
}

/// `x = k exp(H) n_upper` with `k` in `SO(n)` and `n_upper` unipotent upper
/// triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaCoords {
    pub k: DMatrix<f64>,
    pub h: Vec<f64>,
    pub n_upper: DMatrix<f64>,
}

impl IwasawaCoords {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.h.len(),
            self.h.iter().map(|x| x.exp()),
        ));
        &self.k * a * &self.n_upper
    }
}

/// `x = k1 exp(H) k2` with `H` nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CartanCoords {
    pub k1: DMatrix<f64>,
    pub h: Vec<f64>,
    pub k2: DMatrix<f64>,
}

impl CartanCoords {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.h.len(),
            self.h.iter().map(|x| x.exp()),
        ));
        &self.k1 * a * &self.k2
    }

    /// `max_i |H_i|`.
    pub fn radius(&self) -> f64 {
        self.h.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn check_condition(x: &GroupElement) -> Result<nalgebra::DVector<f64>> {
    let sv = x.m.singular_values();
    let (max, min) = (sv.max(), sv.min());
    let cond = max / min;
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    Ok(sv)
}

/// QR factorisation with positive pivots.
pub fn iwasawa_decompose(x: &GroupElement) -> Result<IwasawaCoords> {
    check_condition(x)?;
    let n = x.n();
    let qr = x.m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| r[(i, i)]).collect();
    let mut n_upper = r;
    for i in 0..n {
        let d = diag[i];
        n_upper.row_mut(i).scale_mut(1.0 / d);
        n_upper[(i, i)] = 1.0;
    }
    Ok(IwasawaCoords {
        k: q,
        h: diag.iter().map(|d| d.ln()).collect(),
        n_upper,
    })
}

/// `H(x)` alone, written into `out` (length `n`), without validation.
///
/// The pivots of the QR factorisation are ratios of Gram determinants of
/// the leading columns.
pub fn iwasawa_h_into(x: &DMatrix<f64>, out: &mut [f64]) {
    let n = x.nrows();
    match n {
        2 => {
            let r11 = x[(0, 0)].hypot(x[(1, 0)]);
            let det = x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)];
            out[0] = r11.ln();
            out[1] = (det / r11).ln();
        }
        3 => {
            let m = nalgebra::Matrix3::from_iterator(x.iter().copied());
            out.copy_from_slice(&iwasawa_h3(&m));
        }
        _ => {
            let r = x.clone().qr().r();
            for i in 0..n {
                out[i] = r[(i, i)].abs().ln();
            }
        }
    }
}

/// `H(x)` for a 3 x 3 matrix: `r11 = |c1|`, `r11 r22 = |c1 x c2|`.
pub fn iwasawa_h3(x: &nalgebra::Matrix3<f64>) -> [f64; 3] {
    let c1 = x.column(0);
    let c2 = x.column(1);
    let r11 = c1.norm();
    let vol2 = c1.cross(&c2).norm();
    let det = x.determinant();
    [r11.ln(), (vol2 / r11).ln(), (det / vol2).ln()]
}

pub fn iwasawa_h(x: &GroupElement) -> Vec<f64> {
    let mut out = vec![0.0; x.n()];
    iwasawa_h_into(&x.m, &mut out);
    out
}

/// Singular value decomposition with descending `exp(H)` and the sign rule:
/// wherever a diagonal entry of `k1` is negative, the matching column of
/// `k1` and row of `k2` are both negated; if `det k1 = -1` afterwards, the
/// last pair is negated.
pub fn cartan_decompose(x: &GroupElement) -> Result<CartanCoords> {
    check_condition(x)?;
    let n = x.n();
    let svd = x.m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut k1 = DMatrix::zeros(n, n);
    let mut k2 = DMatrix::zeros(n, n);
    let mut h = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        k1.set_column(dst, &u.column(src));
        k2.set_row(dst, &vt.row(src));
        h.push(svd.singular_values[src].ln());
    }
    for j in 0..n {
        if k1[(j, j)] < 0.0 {
            k1.column_mut(j).neg_mut();
            k2.row_mut(j).neg_mut();
        }
    }
    if k1.determinant() < 0.0 {
        k1.column_mut(n - 1).neg_mut();
        k2.row_mut(n - 1).neg_mut();
    }
    Ok(CartanCoords { k1, h, k2 })
}

/// Cartan radius `max_i |H_i| = max(log |x|, log |x^-1|)` in operator norm.
pub fn cartan_radius(x: &GroupElement) -> f64 {
    if x.n() == 2 {
        return sl2::cartan(&sl2::from_dmatrix(&x.m)).1;
    }
    let sv = x.m.singular_values();
    sv.max().ln().max(-sv.min().ln())
}

/// A nonincreasing trace-zero vector with `max |h_i| = radius`.
pub fn random_chamber_vector<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let mut h: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mean = h.iter().sum::<f64>() / n as f64;
    h.iter_mut().for_each(|x| *x -= mean);
    let m = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > 0.0 {
        h.iter_mut().for_each(|x| *x *= radius / m);
    }
    h.sort_by(|a, b| b.total_cmp(a));
    h
}
