//! Restricted root systems, their Weyl groups and the combinatorics of
//! spectral parameters.
//!
//! Everything lives in an orthonormal frame of `a*` (with respect to the
//! trace form for `sl(n, R)`), so the Gram matrix is the identity and Weyl
//! group elements are orthogonal matrices in the ordinary sense. Elements
//! `H` of `a` are identified with `a*` through the same inner product, and
//! `alpha(H)` is the dot product of frame coordinates.

mod hull;
mod weyl;

pub use hull::{in_convex_weyl_hull, in_convex_weyl_hull_brute, in_convex_weyl_hull_fast};
pub use weyl::{contains_minus_identity, generate_weyl, WeylGroup, WEYL_CLOSURE_CAP};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Identifiers accepted by [`build_root_system`].
pub const SUPPORTED_IDENTIFIERS: &str = "sl(n,R) for n >= 2, A1, A2, B2";

/// Tolerance for chamber and dominance tests.
pub const CHAMBER_TOL: f64 = 1e-9;

/// A reduced root system with multiplicities, stored in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSystem {
    label: String,
    rank: usize,
    positive_roots: Vec<DVector<f64>>,
    multiplicities: Vec<u32>,
    simple_roots: Vec<usize>,
    gram: DMatrix<f64>,
    rho: DVector<f64>,
    /// Columns are an orthonormal basis of the frame inside the ambient
    /// coordinate space (the diagonal of `sl(n)` for group systems).
    embedding: DMatrix<f64>,
    group_n: Option<usize>,
}

/// Instantiate the root data for a group or abstract type identifier.
pub fn build_root_system(id: &str) -> Result<RootSystem> {
    RootSystem::build(id)
}

impl RootSystem {
    pub fn build(id: &str) -> Result<Self> {
        let norm: String = id.chars().filter(|c| !c.is_whitespace()).collect();
        match norm.as_str() {
            "A1" => Ok(Self::type_a(1, "A1".into(), None)),
            "A2" => Ok(Self::type_a(2, "A2".into(), None)),
            "B2" => Ok(Self::type_b2()),
            _ => match parse_sl(&norm) {
                Some(n) if n >= 2 => Ok(Self::type_a(n - 1, format!("sl({n},R)"), Some(n))),
                _ => Err(Error::UnknownIdentifier {
                    given: id.to_string(),
                    supported: SUPPORTED_IDENTIFIERS.to_string(),
                }),
            },
        }
    }

    /// Type A_r realised on the trace-zero diagonal of `sl(r+1)`.
    fn type_a(rank: usize, label: String, group_n: Option<usize>) -> Self {
        let n = rank + 1;
        let embedding = helmert_frame(n);
        let mut positive_roots = Vec::new();
        let mut simple_roots = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut amb = DVector::zeros(n);
                amb[i] = 1.0;
                amb[j] = -1.0;
                if j == i + 1 {
                    simple_roots.push(positive_roots.len());
                }
                positive_roots.push(embedding.transpose() * amb);
            }
        }
        let multiplicities = vec![1; positive_roots.len()];
        Self::assemble(label, rank, positive_roots, multiplicities, simple_roots, embedding, group_n)
    }

    fn type_b2() -> Self {
        let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        let positive_roots = vec![v(1.0, -1.0), v(0.0, 1.0), v(1.0, 0.0), v(1.0, 1.0)];
        Self::assemble(
            "B2".into(),
            2,
            positive_roots,
            vec![1; 4],
            vec![0, 1],
            DMatrix::identity(2, 2),
            None,
        )
    }

    fn assemble(
        label: String,
        rank: usize,
        positive_roots: Vec<DVector<f64>>,
        multiplicities: Vec<u32>,
        simple_roots: Vec<usize>,
        embedding: DMatrix<f64>,
        group_n: Option<usize>,
    ) -> Self {
        let mut rho = DVector::zeros(rank);
        for (a, &m) in positive_roots.iter().zip(&multiplicities) {
            rho += a * (0.5 * m as f64);
        }
        RootSystem {
            label,
            rank,
            positive_roots,
            multiplicities,
            simple_roots,
            gram: DMatrix::identity(rank, rank),
            rho,
            embedding,
            group_n,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn positive_roots(&self) -> &[DVector<f64>] {
        &self.positive_roots
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Indices of the simple roots inside [`Self::positive_roots`].
    pub fn simple_root_indices(&self) -> &[usize] {
        &self.simple_roots
    }

    pub fn simple_roots(&self) -> impl Iterator<Item = &DVector<f64>> + '_ {
        self.simple_roots.iter().map(move |&i| &self.positive_roots[i])
    }

    pub fn simple_root(&self, i: usize) -> &DVector<f64> {
        &self.positive_roots[self.simple_roots[i]]
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn rho(&self) -> &DVector<f64> {
        &self.rho
    }

    pub fn embedding(&self) -> &DMatrix<f64> {
        &self.embedding
    }

    /// `Some(n)` when the system is the restricted root system of `SL(n, R)`.
    pub fn group_size(&self) -> Option<usize> {
        self.group_n
    }

    pub fn pair(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.gram * b))
    }

    /// Frame coordinates of an ambient vector (e.g. a trace-zero diagonal).
    pub fn to_frame(&self, ambient: &[f64]) -> DVector<f64> {
        self.embedding.transpose() * DVector::from_column_slice(ambient)
    }

    pub fn from_frame(&self, h: &DVector<f64>) -> Vec<f64> {
        (&self.embedding * h).iter().copied().collect()
    }

    /// `alpha(H)` for every positive root.
    pub fn root_values(&self, h: &DVector<f64>) -> Vec<f64> {
        self.positive_roots.iter().map(|a| self.pair(a, h)).collect()
    }

    pub fn min_root_value(&self, h: &DVector<f64>) -> f64 {
        self.simple_roots()
            .map(|a| self.pair(a, h))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn in_closed_chamber(&self, h: &DVector<f64>, tol: f64) -> bool {
        self.min_root_value(h) >= -tol
    }

    /// Coefficients of `v` in the basis of simple roots.
    pub fn simple_coefficients(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.simple_matrix();
        s.lu().solve(v).ok_or(Error::SingularSimpleRoots)
    }

    fn simple_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.simple_roots().cloned().collect::<Vec<_>>())
    }

    /// Coordinates `<v, H_j>` against the dual basis.
    pub fn dual_coords(&self, v: &DVector<f64>) -> Result<Vec<f64>> {
        let basis = dual_basis(self)?;
        Ok(basis.iter().map(|h| self.pair(v, h)).collect())
    }

    /// The vector with `<v, H_j> = coords[j]`, i.e. `sum_j coords[j] alpha_j`.
    pub fn from_dual_coords(&self, coords: &[f64]) -> Result<DVector<f64>> {
        if coords.len() != self.rank {
            return Err(Error::DimensionMismatch {
                expected: self.rank,
                got: coords.len(),
            });
        }
        let mut v = DVector::zeros(self.rank);
        for (j, c) in coords.iter().enumerate() {
            v += self.simple_root(j) * *c;
        }
        Ok(v)
    }

    /// Reflection matrix in the hyperplane orthogonal to `alpha`.
    pub fn reflection(&self, alpha: &DVector<f64>) -> DMatrix<f64> {
        let ga = &self.gram * alpha;
        let denom = alpha.dot(&ga);
        DMatrix::identity(self.rank, self.rank) - alpha * ga.transpose() * (2.0 / denom)
    }

    /// Verify the structural invariants of the root data.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.multiplicities.len() != self.positive_roots.len() {
            return fail("multiplicities misaligned with positive roots".into());
        }
        for a in &self.positive_roots {
            let c = self.simple_coefficients(a)?;
            let resid = (self.simple_matrix() * &c - a).norm();
            if resid >= 1e-10 {
                return fail(format!("root not in the simple-root lattice span ({resid:e})"));
            }
            for x in c.iter() {
                if *x < -1e-10 || (x - x.round()).abs() > 1e-10 {
                    return fail(format!("root has non-integral or negative coefficient {x}"));
                }
            }
        }
        let mut half_sum = DVector::zeros(self.rank);
        for (a, &m) in self.positive_roots.iter().zip(&self.multiplicities) {
            half_sum += a * (0.5 * m as f64);
        }
        if (&half_sum - &self.rho).amax() > 1e-12 {
            return fail("rho is not the weighted half-sum of positive roots".into());
        }
        for h in dual_basis(self)? {
            if self.pair(&self.rho, &h) <= 0.0 {
                return fail("rho is not strictly dominant".into());
            }
        }
        Ok(())
    }
}

fn parse_sl(s: &str) -> Option<usize> {
    let lower = s.to_ascii_lowercase();
    let inner = lower.strip_prefix("sl(")?.strip_suffix(",r)")?;
    inner.parse().ok()
}

/// Orthonormal basis of the trace-zero hyperplane in `R^n` (Helmert basis).
fn helmert_frame(n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n - 1);
    for k in 1..n {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            e[(i, k - 1)] = scale;
        }
        e[(k, k - 1)] = -(k as f64) * scale;
    }
    e
}

/// The basis `H_1, ..., H_r` of `a` dual to the simple roots.
pub fn dual_basis(rs: &RootSystem) -> Result<Vec<DVector<f64>>> {
    // rows of (S^T G) are alpha_i^T G; its inverse has the H_j as columns
    let st_g = rs.simple_matrix().transpose() * &rs.gram;
    let inv = st_g.try_inverse().ok_or(Error::SingularSimpleRoots)?;
    if !inv.iter().all(|x| x.is_finite()) {
        return Err(Error::SingularSimpleRoots);
    }
    Ok((0..rs.rank).map(|j| inv.column(j).into_owned()).collect())
}

/// A point of the complexified dual, `re + i im`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParam {
    pub re: DVector<f64>,
    pub im: DVector<f64>,
}

impl SpectralParam {
    pub fn real(re: DVector<f64>) -> Self {
        let im = DVector::zeros(re.len());
        SpectralParam { re, im }
    }

    pub fn complex(re: DVector<f64>, im: DVector<f64>) -> Self {
        assert_eq!(re.len(), im.len(), "real and imaginary parts differ in rank");
        SpectralParam { re, im }
    }

    pub fn zero(rank: usize) -> Self {
        Self::real(DVector::zeros(rank))
    }

    /// `t * rho`.
    pub fn rho_multiple(rs: &RootSystem, t: f64) -> Self {
        Self::real(rs.rho() * t)
    }

    /// Parameter given by its coordinates against the dual basis `H_j`.
    pub fn from_dual(rs: &RootSystem, re: &[f64], im: &[f64]) -> Result<Self> {
        Ok(Self::complex(rs.from_dual_coords(re)?, rs.from_dual_coords(im)?))
    }

    pub fn rank(&self) -> usize {
        self.re.len()
    }

    pub fn is_real(&self) -> bool {
        self.im.iter().all(|x| *x == 0.0)
    }

    pub fn real_part(&self) -> SpectralParam {
        Self::real(self.re.clone())
    }

    pub fn require_real(&self) -> Result<()> {
        if self.is_real() {
            Ok(())
        } else {
            Err(Error::ComplexParameter {
                im_norm: self.im.norm(),
            })
        }
    }

    pub fn min_simple_pairing(&self, rs: &RootSystem) -> f64 {
        rs.simple_roots()
            .map(|a| rs.pair(&self.re, a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Real part in the closed dominant chamber.
    pub fn is_dominant(&self, rs: &RootSystem) -> bool {
        self.min_simple_pairing(rs) >= -CHAMBER_TOL
    }

    pub fn require_dominant(&self, rs: &RootSystem) -> Result<()> {
        let min_pairing = self.min_simple_pairing(rs);
        if min_pairing >= -CHAMBER_TOL {
            Ok(())
        } else {
            Err(Error::NotDominant { min_pairing })
        }
    }

    pub fn apply(&self, w: &DMatrix<f64>) -> SpectralParam {
        SpectralParam {
            re: w * &self.re,
            im: w * &self.im,
        }
    }

    pub fn scaled(&self, c: f64) -> SpectralParam {
        SpectralParam {
            re: &self.re * c,
            im: &self.im * c,
        }
    }
}

/// A dominant element of the orbit `W lambda`, together with the index of
/// the Weyl element producing it.
pub fn dominant_representative_with_element(
    rs: &RootSystem,
    w: &WeylGroup,
    lambda: &SpectralParam,
) -> Result<(SpectralParam, usize)> {
    lambda.require_real()?;
    let mut best: Option<(f64, usize)> = None;
    for (idx, el) in w.elements().iter().enumerate() {
        let img = el * &lambda.re;
        let m = rs
            .simple_roots()
            .map(|a| rs.pair(&img, a))
            .fold(f64::INFINITY, f64::min);
        if best.map_or(true, |(bm, _)| m > bm) {
            best = Some((m, idx));
        }
        if m >= 0.0 {
            break;
        }
    }
    let (_, idx) = best.expect("Weyl group contains the identity");
    Ok((lambda.apply(&w.elements()[idx]), idx))
}

/// The representative of `W lambda` in the closed dominant chamber.
pub fn dominant_representative(
    rs: &RootSystem,
    w: &WeylGroup,
    lambda: &SpectralParam,
) -> Result<SpectralParam> {
    dominant_representative_with_element(rs, w, lambda).map(|(p, _)| p)
}

/// Kostant's criterion: some `w` with `w Re(lambda) = -Re(lambda)` and
/// `w Im(lambda) = Im(lambda)`.
pub fn is_hermitean_param(w: &WeylGroup, lambda: &SpectralParam) -> bool {
    const TOL: f64 = 1e-10;
    w.elements().iter().any(|el| {
        (el * &lambda.re + &lambda.re).amax() <= TOL && (el * &lambda.im - &lambda.im).amax() <= TOL
    })
}

/// The parameter whose dual coordinates are the coordinate-wise maxima over
/// `params`; it dominates every member of `params` in the hull order.
pub fn minimal_dominating_param(rs: &RootSystem, params: &[SpectralParam]) -> Result<SpectralParam> {
    if params.is_empty() {
        return Err(Error::EmptyParameterSet);
    }
    let basis = dual_basis(rs)?;
    let mut coords = vec![f64::NEG_INFINITY; rs.rank()];
    for p in params {
        p.require_real()?;
        p.require_dominant(rs)?;
        for (c, h) in coords.iter_mut().zip(&basis) {
            *c = c.max(rs.pair(&p.re, h));
        }
    }
    Ok(SpectralParam::real(rs.from_dual_coords(&coords)?))
}

/// Integrability threshold of the envelope `p(H) e^{(lambda - rho)(H)}`
/// against the Haar density on the chamber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalExponent {
    Finite(f64),
    /// `<lambda, H_j> >= <rho, H_j>` for some `j`: no `L^q` decay at all.
    NoDecay,
}

impl CriticalExponent {
    pub fn value(self) -> f64 {
        match self {
            CriticalExponent::Finite(q) => q,
            CriticalExponent::NoDecay => f64::INFINITY,
        }
    }
}

/// The exponent `q` such that the envelope of `phi_lambda` lies in `L^{q'}`
/// for every `q' > q`.
///
/// The Haar density grows like `e^{2 rho(H)}` and the envelope decays like
/// `e^{(lambda - rho)(H)}`, so the `q'`-th power is integrable on the cone
/// spanned by the `H_j` iff `q' (rho - lambda)(H_j) > 2 rho(H_j)` for every
/// edge `H_j`. The polynomial factor `p_lambda` only contributes powers of
/// `|H|`, which never move this threshold.
pub fn critical_integrability_exponent(
    rs: &RootSystem,
    lambda: &SpectralParam,
) -> Result<CriticalExponent> {
    lambda.require_real()?;
    lambda.require_dominant(rs)?;
    let mut q: f64 = 0.0;
    for h in dual_basis(rs)? {
        let rho_h = rs.pair(rs.rho(), &h);
        let gap = rs.pair(&(rs.rho() - &lambda.re), &h);
        if gap <= 0.0 {
            return Ok(CriticalExponent::NoDecay);
        }
        q = q.max(2.0 * rho_h / gap);
    }
    Ok(CriticalExponent::Finite(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn named_system_sizes() {
        for (id, npos, rank) in [("A1", 1, 1), ("A2", 3, 2), ("B2", 4, 2), ("sl(4,R)", 6, 3)] {
            let rs = build_root_system(id).unwrap();
            assert_eq!(rs.positive_roots().len(), npos, "{id}");
            assert_eq!(rs.rank(), rank);
            rs.check_invariants().unwrap();
        }
    }

    #[test]
    fn sl2_dimension_audit() {
        let rs = build_root_system("sl(2,R)").unwrap();
        // dim g = dim k + r + sum of multiplicities: 3 = 1 + 1 + 1
        let m: u32 = rs.multiplicities().iter().sum();
        assert_eq!(1 + rs.rank() as u32 + m, 3);
        assert_abs_diff_eq!((rs.rho() - rs.simple_root(0) * 0.5).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sl3_rho_is_sum_of_simple_roots() {
        let rs = build_root_system("sl(3, R)").unwrap();
        let m: u32 = rs.multiplicities().iter().sum();
        assert_eq!(3 + rs.rank() as u32 + m, 8);
        let s = rs.simple_root(0) + rs.simple_root(1);
        assert_abs_diff_eq!((rs.rho() - s).amax(), 0.0, epsilon = 1e-14);
        assert_eq!(rs.group_size(), Some(3));
    }

    #[test]
    fn build_is_deterministic() {
        assert_eq!(build_root_system("A2").unwrap(), build_root_system("A2").unwrap());
    }

    #[test]
    fn unknown_identifier_lists_supported() {
        match build_root_system("G2") {
            Err(Error::UnknownIdentifier { supported, .. }) => assert!(supported.contains("B2")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(build_root_system("sl(1,R)").is_err());
    }

    #[test]
    fn dual_basis_is_dual() {
        for id in ["A1", "A2", "B2", "sl(4,R)"] {
            let rs = build_root_system(id).unwrap();
            let h = dual_basis(&rs).unwrap();
            for i in 0..rs.rank() {
                for (j, hj) in h.iter().enumerate() {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((rs.pair(rs.simple_root(i), hj) - d).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dual_basis_residual_against_independent_solve() {
        // Gaussian elimination with partial pivoting, written out by hand.
        let rs = build_root_system("B2").unwrap();
        let h = dual_basis(&rs).unwrap();
        let r = rs.rank();
        for (j, hj) in h.iter().enumerate() {
            let mut a: Vec<Vec<f64>> = (0..r)
                .map(|i| {
                    let mut row: Vec<f64> = rs.simple_root(i).iter().copied().collect();
                    row.push(if i == j { 1.0 } else { 0.0 });
                    row
                })
                .collect();
            for c in 0..r {
                let p = (c..r).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
                a.swap(c, p);
                for rr in 0..r {
                    if rr != c {
                        let f = a[rr][c] / a[c][c];
                        for k in 0..=r {
                            a[rr][k] -= f * a[c][k];
                        }
                    }
                }
            }
            for i in 0..r {
                assert!((a[i][r] / a[i][i] - hj[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn critical_exponent_examples() {
        let rs = build_root_system("A2").unwrap();
        let q0 = critical_integrability_exponent(&rs, &SpectralParam::zero(2)).unwrap();
        assert_eq!(q0, CriticalExponent::Finite(2.0));
        let q = critical_integrability_exponent(&rs, &SpectralParam::rho_multiple(&rs, 0.5)).unwrap();
        assert!((q.value() - 4.0).abs() < 1e-14);
        let top = critical_integrability_exponent(&rs, &SpectralParam::rho_multiple(&rs, 1.0)).unwrap();
        assert_eq!(top, CriticalExponent::NoDecay);
        assert!(top.value().is_infinite());
    }

    #[test]
    fn hermitean_examples() {
        let a1 = build_root_system("A1").unwrap();
        let w1 = generate_weyl(&a1).unwrap();
        assert!(is_hermitean_param(&w1, &SpectralParam::rho_multiple(&a1, 0.37)));

        let a2 = build_root_system("A2").unwrap();
        let w2 = generate_weyl(&a2).unwrap();
        assert!(is_hermitean_param(&w2, &SpectralParam::rho_multiple(&a2, -1.3)));
        let lam = SpectralParam::real(a2.simple_root(0) + a2.simple_root(1) * 0.5);
        assert!(!is_hermitean_param(&w2, &lam));
        // i * lambda with lambda off the root lines: w Im = Im needs w = id
        let pure_imag = SpectralParam::complex(DVector::zeros(2), lam.re.clone());
        assert!(is_hermitean_param(&w2, &pure_imag));
    }

    #[test]
    fn minimal_dominating_examples() {
        let rs = build_root_system("A2").unwrap();
        let w = generate_weyl(&rs).unwrap();
        let lam = SpectralParam::rho_multiple(&rs, 0.3);
        assert!((minimal_dominating_param(&rs, &[lam.clone()]).unwrap().re - &lam.re).amax() < 1e-14);

        let mu = SpectralParam::rho_multiple(&rs, 0.7);
        let star = minimal_dominating_param(&rs, &[lam.clone(), mu.clone()]).unwrap();
        assert!((star.re - &mu.re).amax() < 1e-14);

        // fundamental weights are incomparable
        let h = dual_basis(&rs).unwrap();
        let w1 = SpectralParam::real(h[0].clone());
        let w2 = SpectralParam::real(h[1].clone());
        let star = minimal_dominating_param(&rs, &[w1.clone(), w2.clone()]).unwrap();
        assert!(in_convex_weyl_hull(&rs, &w, &w1, &star).unwrap());
        assert!(in_convex_weyl_hull(&rs, &w, &w2, &star).unwrap());
        assert!(!in_convex_weyl_hull(&rs, &w, &w1, &w2).unwrap());

        assert_eq!(minimal_dominating_param(&rs, &[]), Err(Error::EmptyParameterSet));
        let bad = SpectralParam::rho_multiple(&rs, -1.0);
        assert!(matches!(
            minimal_dominating_param(&rs, &[bad]),
            Err(Error::NotDominant { .. })
        ));
    }

    #[test]
    fn dominant_representative_examples() {
        let a1 = build_root_system("A1").unwrap();
        let w = generate_weyl(&a1).unwrap();
        let out = dominant_representative(&a1, &w, &SpectralParam::rho_multiple(&a1, -3.0)).unwrap();
        assert!((out.re - a1.rho() * 3.0).amax() < 1e-14);
        let dom = SpectralParam::rho_multiple(&a1, 2.0);
        assert_eq!(dominant_representative(&a1, &w, &dom).unwrap(), dom);
    }
}
