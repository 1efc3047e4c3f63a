use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;

use super::RootSystem;
use crate::error::{Error, Result};

/// Closure beyond this many elements means the root data is not a finite
/// reflection system.
pub const WEYL_CLOSURE_CAP: usize = 1_000_000;

/// A fully enumerated Weyl group acting on the frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylGroup {
    elements: Vec<DMatrix<f64>>,
    generators: Vec<usize>,
}

impl WeylGroup {
    /// Element 0 is always the identity.
    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    /// Indices (into [`Self::elements`]) of the simple reflections.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Index of the element equal to `m` within `1e-10`.
    pub fn position(&self, m: &DMatrix<f64>) -> Option<usize> {
        self.elements.iter().position(|e| (e - m).amax() <= 1e-10)
    }
}

fn key(m: &DMatrix<f64>) -> Vec<i64> {
    m.iter().map(|x| (x * 1e7).round() as i64).collect()
}

/// Close the simple reflections under composition.
pub fn generate_weyl(rs: &RootSystem) -> Result<WeylGroup> {
    generate_from_reflections(rs.simple_roots().map(|a| rs.reflection(a)).collect(), rs.rank())
}

fn generate_from_reflections(gens: Vec<DMatrix<f64>>, rank: usize) -> Result<WeylGroup> {
    generate_capped(gens, rank, WEYL_CLOSURE_CAP)
}

fn generate_capped(gens: Vec<DMatrix<f64>>, rank: usize, cap: usize) -> Result<WeylGroup> {
    let mut elements = vec![DMatrix::identity(rank, rank)];
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(key(&elements[0]), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for g in &gens {
            let next = g * &elements[idx];
            let k = key(&next);
            if seen.contains_key(&k) {
                continue;
            }
            if elements.len() >= cap {
                return Err(Error::WeylClosureOverflow { cap });
            }
            seen.insert(k, elements.len());
            queue.push_back(elements.len());
            elements.push(next);
        }
    }
    let generators = gens.iter().map(|g| seen[&key(g)]).collect();
    Ok(WeylGroup {
        elements,
        generators,
    })
}

/// Whether `-I` belongs to the group.
pub fn contains_minus_identity(w: &WeylGroup) -> bool {
    w.elements().iter().any(|e| {
        let n = e.nrows();
        (e + DMatrix::<f64>::identity(n, n)).amax() <= 1e-10
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsys::build_root_system;

    #[test]
    fn classical_orders() {
        for (id, order, minus_i) in [
            ("A1", 2, true),
            ("A2", 6, false),
            ("B2", 8, true),
            ("sl(4,R)", 24, false),
        ] {
            let rs = build_root_system(id).unwrap();
            let w = generate_weyl(&rs).unwrap();
            assert_eq!(w.order(), order, "{id}");
            assert_eq!(contains_minus_identity(&w), minus_i, "{id}");
            assert_eq!(w.generators().len(), rs.rank());
        }
    }

    #[test]
    fn elements_are_orthogonal_and_permute_roots() {
        for id in ["A1", "A2", "B2"] {
            let rs = build_root_system(id).unwrap();
            let w = generate_weyl(&rs).unwrap();
            let mut roots: Vec<_> = rs.positive_roots().to_vec();
            roots.extend(rs.positive_roots().iter().map(|a| -a));
            for e in w.elements() {
                assert!((e.transpose() * rs.gram() * e - rs.gram()).amax() < 1e-10);
                for a in &roots {
                    let img = e * a;
                    assert!(roots.iter().any(|b| (&img - b).amax() < 1e-10));
                }
                // closed under inverse
                assert!(w.position(&e.transpose()).is_some());
            }
            // closed under composition
            for a in w.elements() {
                for b in w.elements() {
                    assert!(w.position(&(a * b)).is_some());
                }
            }
        }
    }

    #[test]
    fn runaway_closure_is_rejected() {
        // mirrors half a radian apart generate an infinite dihedral group
        let mirror = |a: f64| {
            DMatrix::from_row_slice(2, 2, &[(2.0 * a).cos(), (2.0 * a).sin(), (2.0 * a).sin(), -(2.0 * a).cos()])
        };
        let err = generate_capped(vec![mirror(0.0), mirror(0.5)], 2, 500).unwrap_err();
        assert_eq!(err, Error::WeylClosureOverflow { cap: 500 });
    }
}
