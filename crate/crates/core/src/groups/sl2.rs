//! Closed forms for `SL(2, R)` on stack matrices, used in inner loops.
//!
//! Rotations are `R(a) = [[cos a, -sin a], [sin a, cos a]]`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix2};

pub fn rot(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// `diag(e^t, e^-t)`.
pub fn a(t: f64) -> Matrix2<f64> {
    Matrix2::new(t.exp(), 0.0, 0.0, (-t).exp())
}

/// `R(th1) a(t) R(th2)`.
pub fn kak(th1: f64, t: f64, th2: f64) -> Matrix2<f64> {
    rot(th1) * a(t) * rot(th2)
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

pub fn to_dmatrix(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

/// Inverse of a determinant-one matrix.
pub fn inv(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

/// Cartan coordinates `(th1, t, th2)` with `m = R(th1) a(t) R(th2)`,
/// `t >= 0` and `th1` in `[-pi/2, pi/2)`.
///
/// Splits `m` into a rotation-scaling part and a reflection-scaling part,
/// whose magnitudes are `(s1 + s2) / 2` and `(s1 - s2) / 2`.
pub fn cartan(m: &Matrix2<f64>) -> (f64, f64, f64) {
    let e = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let f = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let g = 0.5 * (m[(1, 0)] + m[(0, 1)]);
    let h = 0.5 * (m[(1, 0)] - m[(0, 1)]);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let sum = h.atan2(e);
    let diff = if r > 0.0 { g.atan2(f) } else { 0.0 };
    let mut th1 = 0.5 * (sum + diff);
    let mut th2 = 0.5 * (sum - diff);
    if th1 >= FRAC_PI_2 {
        th1 -= PI;
        th2 += PI;
    } else if th1 < -FRAC_PI_2 {
        th1 += PI;
        th2 -= PI;
    }
    // (q + r)(q - r) = det; the ratio form keeps t exact for det = 1
    let t = 0.5 * ((q + r) / (q - r)).ln();
    (th1, t, th2)
}

/// `H(m)` as the scalar `s` with `H = (s, -s)`.
pub fn iwasawa_s(m: &Matrix2<f64>) -> f64 {
    m[(0, 0)].hypot(m[(1, 0)]).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartan_closed_form_inverts_kak() {
        for &(a1, t, a2) in &[
            (0.3, 1.2, -2.0),
            (-1.0, 0.0, 0.4),
            (1.5, 5.0, 3.0),
            (-1.57, 0.01, -0.2),
            (0.0, 8.0, 0.0),
        ] {
            let m = kak(a1, t, a2);
            let (b1, s, b2) = cartan(&m);
            assert!((s - t).abs() < 1e-10, "t {t} vs {s}");
            assert!((kak(b1, s, b2) - m).amax() < 1e-10 * m.amax());
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&b1));
        }
    }

    #[test]
    fn iwasawa_of_kan() {
        let n = Matrix2::new(1.0, 0.7, 0.0, 1.0);
        let m = rot(0.9) * a(1.3) * n;
        assert!((iwasawa_s(&m) - 1.3).abs() < 1e-14);
    }
}
