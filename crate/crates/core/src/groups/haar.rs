use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::rootsys::{dual_basis, RootSystem, CHAMBER_TOL};

/// `w(H) = prod sinh(alpha(H))^m_alpha` for `H` (frame coordinates) in the
/// closed positive chamber.
///
/// With this density and Lebesgue measure on the frame coordinates,
/// `int_G F = int_K int_{A+} int_K F(k1 exp(H) k2) w(H) dk1 dH dk2` for
/// probability measures on `K`.
pub fn haar_density(rs: &RootSystem, h: &DVector<f64>) -> Result<f64> {
    if h.len() != rs.rank() {
        return Err(Error::DimensionMismatch {
            expected: rs.rank(),
            got: h.len(),
        });
    }
    let vals = rs.root_values(h);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -CHAMBER_TOL {
        return Err(Error::OutsideChamber { min_root: min });
    }
    Ok(vals
        .iter()
        .zip(rs.multiplicities())
        .map(|(a, &m)| a.max(0.0).sinh().powi(m as i32))
        .product())
}

/// Haar-distributed element of `SO(n)`: Gram-Schmidt of a Gaussian matrix
/// with positive pivots, then the first column is negated if needed to land
/// in the identity component.
pub fn haar_sample_k<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            q.column_mut(i).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// A node of a chamber rule: `weight` already contains `w(H) dH`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamberNode {
    /// Frame coordinates.
    pub h: DVector<f64>,
    /// Ambient coordinates (diagonal of the Lie algebra for group systems).
    pub ambient: Vec<f64>,
    pub weight: f64,
}

/// Ambient sup-norm of a frame vector; equals the Cartan radius for groups.
pub fn radius_of(rs: &RootSystem, u: &DVector<f64>) -> f64 {
    rs.from_frame(u).iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Index of the ambient coordinate attaining the sup-norm.
fn argmax_abs(rs: &RootSystem, u: &DVector<f64>) -> usize {
    let amb = rs.from_frame(u);
    let mut best = 0;
    for (i, x) in amb.iter().enumerate() {
        if x.abs() > amb[best].abs() + 1e-13 {
            best = i;
        }
    }
    best
}

/// Gauss rule for `int_{A+, |H| <= radius} F(H) w(H) dH` in polar
/// coordinates, with `|H|` the ambient sup-norm.
///
/// The angular interval is split where the sup-norm changes its active
/// coordinate so each panel carries a smooth integrand.
pub fn chamber_rule(
    rs: &RootSystem,
    radius: f64,
    radial_order: usize,
    angular_order: usize,
) -> Result<Vec<ChamberNode>> {
    chamber_rule_split(rs, &[radius], radial_order, angular_order)
}

/// As [`chamber_rule`], with radial panels split at the given Cartan radii
/// (increasing, the last one being the outer radius), so integrands with
/// kinks on those spheres are integrated panel by panel.
pub fn chamber_rule_split(
    rs: &RootSystem,
    breaks: &[f64],
    radial_order: usize,
    angular_order: usize,
) -> Result<Vec<ChamberNode>> {
    let radius = breaks.last().copied().unwrap_or(0.0);
    if !(radius > 0.0) || radial_order == 0 || angular_order == 0 || breaks.windows(2).any(|w| !(w[0] < w[1])) || !(breaks[0] > 0.0) {
        return Err(Error::InvalidQuadrature("chamber rule needs increasing positive radii and positive orders".into()));
    }
    let radial = |scale: f64| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut lo = 0.0;
        for &b in breaks {
            out.extend(gauss_legendre_on(radial_order, lo * scale, b * scale));
            lo = b;
        }
        out
    };
    let duals = dual_basis(rs)?;
    let make = |h: DVector<f64>, weight: f64| -> Result<ChamberNode> {
        let w = haar_density(rs, &h)?;
        Ok(ChamberNode {
            ambient: rs.from_frame(&h),
            h,
            weight: weight * w,
        })
    };
    match rs.rank() {
        1 => {
            let u = &duals[0] / duals[0].norm();
            radial(1.0 / radius_of(rs, &u))
                .into_iter()
                .map(|(r, w)| make(&u * r, w))
                .collect()
        }
        2 => {
            let ea = &duals[0] / duals[0].norm();
            let hb = &duals[1] / duals[1].norm();
            let perp = &hb - &ea * ea.dot(&hb);
            let eb = &perp / perp.norm();
            let opening = ea.dot(&hb).clamp(-1.0, 1.0).acos();
            let dir = |th: f64| &ea * th.cos() + &eb * th.sin();
            let mut breaks = vec![0.0];
            let probes = 2048;
            for i in 0..probes {
                let (a, b) = (opening * i as f64 / probes as f64, opening * (i + 1) as f64 / probes as f64);
                if argmax_abs(rs, &dir(a)) != argmax_abs(rs, &dir(b)) {
                    // locate the tie by bisection on the difference of the
                    // two competing coordinates
                    let (ia, ib) = (argmax_abs(rs, &dir(a)), argmax_abs(rs, &dir(b)));
                    let gap = |th: f64| {
                        let amb = rs.from_frame(&dir(th));
                        amb[ia].abs() - amb[ib].abs()
                    };
                    let (mut lo, mut hi) = (a, b);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if gap(mid) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    breaks.push(0.5 * (lo + hi));
                }
            }
            breaks.push(opening);
            let mut nodes = Vec::new();
            for pair in breaks.windows(2) {
                for (th, wt) in gauss_legendre_on(angular_order, pair[0], pair[1]) {
                    let u = dir(th);
                    for (r, wr) in radial(1.0 / radius_of(rs, &u)) {
                        nodes.push(make(&u * r, wt * wr * r)?);
                    }
                }
            }
            Ok(nodes)
        }
        r => Err(Error::Unsupported {
            op: "chamber_rule",
            what: format!("rank {r}"),
        }),
    }
}
