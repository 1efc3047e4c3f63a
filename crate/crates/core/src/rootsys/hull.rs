use combos::combinations;
use nalgebra::{DMatrix, DVector};

use super::{dominant_representative, RootSystem, SpectralParam, WeylGroup};
use crate::error::{Error, Result};

/// Membership tolerance; the hull is closed so the test is inclusive.
pub const HULL_TOL: f64 = 1e-9;

/// `lambda in conv(W mu)` through dominant representatives: holds iff
/// `mu+ - lambda+` is a nonnegative combination of simple roots.
pub fn in_convex_weyl_hull_fast(
    rs: &RootSystem,
    w: &WeylGroup,
    lambda: &SpectralParam,
    mu: &SpectralParam,
) -> Result<bool> {
    let lp = dominant_representative(rs, w, lambda)?;
    let mp = dominant_representative(rs, w, mu)?;
    let coeffs = rs.simple_coefficients(&(mp.re - lp.re))?;
    Ok(coeffs.iter().all(|c| *c >= -HULL_TOL))
}

/// `lambda in conv(W mu)` by enumerating the orbit and testing `lambda`
/// against every supporting hyperplane spanned by `rank` orbit points.
pub fn in_convex_weyl_hull_brute(
    w: &WeylGroup,
    lambda: &SpectralParam,
    mu: &SpectralParam,
) -> Result<bool> {
    lambda.require_real()?;
    mu.require_real()?;
    let mut orbit: Vec<DVector<f64>> = Vec::new();
    for el in w.elements() {
        let p = el * &mu.re;
        if !orbit.iter().any(|q| (q - &p).amax() <= 1e-12) {
            orbit.push(p);
        }
    }
    let x = &lambda.re;
    let r = x.len();
    if orbit.len() == 1 {
        return Ok((x - &orbit[0]).amax() <= HULL_TOL);
    }
    if r == 1 {
        let lo = orbit.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = orbit.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return Ok(x[0] >= lo - HULL_TOL && x[0] <= hi + HULL_TOL);
    }
    let mut found_facet = false;
    for idx in combinations(orbit.len(), r) {
        let Some(normal) = hyperplane_normal(&orbit, &idx) else {
            continue;
        };
        let base = &orbit[idx[0]];
        let offsets: Vec<f64> = orbit.iter().map(|p| normal.dot(&(p - base))).collect();
        let max = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        // orient so that the orbit lies in {normal . (p - base) <= 0}
        let sign = if max <= 1e-12 {
            1.0
        } else if min >= -1e-12 {
            -1.0
        } else {
            continue;
        };
        found_facet = true;
        if sign * normal.dot(&(x - base)) > HULL_TOL {
            return Ok(false);
        }
    }
    if !found_facet {
        // orbit spans a proper affine subspace; not reachable for the
        // irreducible systems supported here
        return Err(Error::Unsupported {
            op: "in_convex_weyl_hull_brute",
            what: "orbits with degenerate affine span".into(),
        });
    }
    Ok(true)
}

fn hyperplane_normal(points: &[DVector<f64>], idx: &[usize]) -> Option<DVector<f64>> {
    let r = points[0].len();
    let base = &points[idx[0]];
    let rows: Vec<_> = idx[1..].iter().map(|&i| (&points[i] - base).transpose()).collect();
    let normal = if r == 2 {
        let d = &rows[0];
        DVector::from_vec(vec![-d[1], d[0]])
    } else {
        // null vector of the (r-1) x r difference matrix
        let mut m = DMatrix::from_rows(&rows);
        m = m.insert_row(r - 1, 0.0);
        let svd = m.svd(false, true);
        let vt = svd.v_t?;
        let (k, smin) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        let second = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, s)| *s)
            .fold(f64::INFINITY, f64::min);
        if second <= 1e-10 || *smin > 1e-10 {
            return None;
        }
        vt.row(k).transpose()
    };
    let n = normal.norm();
    if n <= 1e-12 {
        None
    } else {
        Some(normal / n)
    }
}

/// Hull membership, computed by both routes; a disagreement is reported as
/// an error rather than silently resolved.
pub fn in_convex_weyl_hull(
    rs: &RootSystem,
    w: &WeylGroup,
    lambda: &SpectralParam,
    mu: &SpectralParam,
) -> Result<bool> {
    let fast = in_convex_weyl_hull_fast(rs, w, lambda, mu)?;
    let brute = in_convex_weyl_hull_brute(w, lambda, mu)?;
    if fast != brute {
        return Err(Error::HullDisagreement {
            lambda: lambda.re.iter().copied().collect(),
            mu: mu.re.iter().copied().collect(),
            fast,
            brute,
        });
    }
    Ok(fast)
}

mod combos {
    /// All increasing `k`-subsets of `0..n`.
    pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
        let mut cur: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let c = cur.as_mut().unwrap();
            let mut i = k;
            loop {
                if i == 0 {
                    cur = None;
                    break;
                }
                i -= 1;
                if c[i] < n - k + i {
                    c[i] += 1;
                    for j in (i + 1)..k {
                        c[j] = c[j - 1] + 1;
                    }
                    break;
                }
            }
            Some(out)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::{build_root_system, generate_weyl};

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(6, 2).count(), 15);
        assert_eq!(combinations(24, 3).count(), 2024);
        assert_eq!(combinations(3, 3).collect::<Vec<_>>(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn trivial_memberships() {
        for id in ["A1", "A2", "B2"] {
            let rs = build_root_system(id).unwrap();
            let w = generate_weyl(&rs).unwrap();
            let mu = SpectralParam::real(rs.simple_root(0) * 0.8 + rs.rho() * 0.1);
            assert!(in_convex_weyl_hull(&rs, &w, &mu, &mu).unwrap());
            assert!(in_convex_weyl_hull(&rs, &w, &SpectralParam::zero(rs.rank()), &mu).unwrap());
        }
    }

    #[test]
    fn rank_one_interval() {
        let rs = build_root_system("A1").unwrap();
        let w = generate_weyl(&rs).unwrap();
        let rho = SpectralParam::rho_multiple(&rs, 1.0);
        let half = SpectralParam::rho_multiple(&rs, 0.5);
        let big = SpectralParam::rho_multiple(&rs, 1.5);
        assert!(in_convex_weyl_hull(&rs, &w, &half, &rho).unwrap());
        assert!(!in_convex_weyl_hull(&rs, &w, &big, &rho).unwrap());
        // inclusive boundary
        let edge = SpectralParam::rho_multiple(&rs, -1.0);
        assert!(in_convex_weyl_hull(&rs, &w, &edge, &rho).unwrap());
    }

    #[test]
    fn sl4_brute_force_runs() {
        let rs = build_root_system("sl(4,R)").unwrap();
        let w = generate_weyl(&rs).unwrap();
        let mu = SpectralParam::rho_multiple(&rs, 1.0);
        let inside = SpectralParam::rho_multiple(&rs, -0.4);
        let outside = SpectralParam::rho_multiple(&rs, 1.1);
        assert!(in_convex_weyl_hull(&rs, &w, &inside, &mu).unwrap());
        assert!(!in_convex_weyl_hull(&rs, &w, &outside, &mu).unwrap());
    }
}
