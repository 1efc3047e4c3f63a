//! Discretisations shared by every integral in the crate.
//!
//! A [`QuadratureSpec`] is a pure description; every result computed from
//! it is a deterministic function of that description and the integrand.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_CIRCLE_ORDER: usize = 256;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DEFAULT_TRUNCATION_RADIUS: f64 = 6.0;

/// Samples per random substream. Sample `i` always comes from stream
/// `i / MC_CHUNK` at offset `i % MC_CHUNK`, so results do not depend on how
/// the work is split across threads.
pub const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// Circle rule with `order` nodes on SO(2).
    GaussCircle { order: usize },
    /// Tensor product of one-dimensional Gauss rules.
    ProductGauss { orders: Vec<usize> },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub rule: Rule,
    /// Outer radius for integrals over the noncompact chamber.
    pub truncation_radius: f64,
    /// Results whose error estimate exceeds `tolerance * max(1, |value|)`
    /// are flagged.
    pub tolerance: f64,
}

impl QuadratureSpec {
    pub fn gauss_circle(order: usize) -> Self {
        QuadratureSpec {
            rule: Rule::GaussCircle { order },
            truncation_radius: DEFAULT_TRUNCATION_RADIUS,
            tolerance: 1e-6,
        }
    }

    pub fn product_gauss(orders: Vec<usize>) -> Self {
        QuadratureSpec {
            rule: Rule::ProductGauss { orders },
            truncation_radius: DEFAULT_TRUNCATION_RADIUS,
            tolerance: 1e-6,
        }
    }

    /// Monte Carlo rules report error bars instead of flagging, so the
    /// tolerance defaults to infinity.
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec {
            rule: Rule::MonteCarlo { samples, seed },
            truncation_radius: DEFAULT_TRUNCATION_RADIUS,
            tolerance: f64::INFINITY,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.truncation_radius = radius;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    /// Same rule family with the node count doubled.
    pub fn refined(&self) -> Self {
        let mut out = self.clone();
        out.rule = match &self.rule {
            Rule::GaussCircle { order } => Rule::GaussCircle { order: order * 2 },
            Rule::ProductGauss { orders } => Rule::ProductGauss {
                orders: orders.iter().map(|o| o * 2).collect(),
            },
            Rule::MonteCarlo { samples, seed } => Rule::MonteCarlo {
                samples: samples * 2,
                seed: *seed,
            },
        };
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidQuadrature(m.to_string()));
        match &self.rule {
            Rule::GaussCircle { order } if *order == 0 => return bad("circle order must be positive"),
            Rule::ProductGauss { orders } if orders.is_empty() || orders.contains(&0) => {
                return bad("product orders must be nonempty and positive")
            }
            Rule::MonteCarlo { samples, .. } if *samples < 2 => {
                return bad("Monte Carlo needs at least two samples")
            }
            _ => {}
        }
        if !(self.truncation_radius > 0.0 && self.truncation_radius.is_finite()) {
            return bad("truncation radius must be positive and finite");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        Ok(())
    }

    pub fn is_flagged(&self, value: f64, error: f64) -> bool {
        !(error <= self.tolerance * value.abs().max(1.0))
    }

    /// Short stable description used in report headers and cache keys.
    pub fn fingerprint(&self) -> String {
        let rule = match &self.rule {
            Rule::GaussCircle { order } => format!("gauss-circle({order})"),
            Rule::ProductGauss { orders } => format!(
                "product-gauss({})",
                orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("x")
            ),
            Rule::MonteCarlo { samples, seed } => format!("monte-carlo({samples},{seed:#x})"),
        };
        format!("{rule};R={:e};tol={:e}", self.truncation_radius, self.tolerance)
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::gauss_circle(DEFAULT_CIRCLE_ORDER)
    }
}

/// Random stream for Monte Carlo chunk `chunk` under `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    x.iter().zip(&w).map(|(x, w)| (mid + half * x, half * w)).collect()
}

/// Nodes on the circle with weights summing to one (normalised Haar
/// measure of SO(2)).
#[derive(Debug, Clone, PartialEq)]
pub struct CircleRule {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CircleRule {
    /// Equispaced nodes; exact for trigonometric polynomials of degree
    /// below `order`.
    pub fn uniform(order: usize) -> Self {
        let w = 1.0 / order as f64;
        CircleRule {
            angles: (0..order).map(|i| TAU * i as f64 / order as f64).collect(),
            weights: vec![w; order],
        }
    }

    /// Rule adapted to integrands with features of width `delta` at the
    /// angles `phase + j pi/2`.
    ///
    /// The circle is cut into eight arcs of length `pi/4`, each with one end
    /// on a feature point. On an arc the distance `s` to the feature is
    /// written `s = delta sinh v`, which flattens profiles like
    /// `(delta^2 + s^2)^(-1/2)`, and `v` is covered by Gauss panels of
    /// length at most one with `order / 32` nodes each, so `order` is the
    /// node count when `delta` is of order one.
    pub fn graded(order: usize, phase: f64, delta: f64) -> Self {
        Self::graded_panels(graded_per_panel(order), phase, delta)
    }

    /// The graded rule and the companion with two fewer nodes per panel,
    /// whose difference serves as the error estimate.
    pub fn graded_pair(order: usize, phase: f64, delta: f64) -> (Self, Self) {
        let p = graded_per_panel(order);
        (
            Self::graded_panels(p, phase, delta),
            Self::graded_panels(p.saturating_sub(2).max(1), phase, delta),
        )
    }

    pub fn graded_panels(per_panel: usize, phase: f64, delta: f64) -> Self {
        Self::graded_dense(per_panel, 1.0, phase, delta)
    }

    /// As [`CircleRule::graded_panels`] with `panels_per_unit` panels per
    /// unit of `v`, for integrands that also oscillate away from the
    /// features.
    pub fn graded_dense(per_panel: usize, panels_per_unit: f64, phase: f64, delta: f64) -> Self {
        let delta = delta.clamp(1e-300, 1.0);
        let w = FRAC_PI_4;
        let v_max = (w / delta).asinh();
        let panels = (v_max * panels_per_unit).ceil().max(1.0) as usize;
        let mut arc = Vec::with_capacity(panels * per_panel);
        let h = v_max / panels as f64;
        let (gx, gw) = gauss_legendre(per_panel);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, wx) in gx.iter().zip(&gw) {
                let v = mid + 0.5 * h * x;
                arc.push((delta * v.sinh(), 0.5 * h * wx * delta * v.cosh()));
            }
        }
        let mut angles = Vec::with_capacity(8 * arc.len());
        let mut weights = Vec::with_capacity(8 * arc.len());
        for j in 0..4 {
            let base = phase + j as f64 * FRAC_PI_2;
            for &(s, ws) in &arc {
                angles.push(base + s);
                weights.push(ws / TAU);
            }
            for &(s, ws) in arc.iter().rev() {
                angles.push(base + FRAC_PI_2 - s);
                weights.push(ws / TAU);
            }
        }
        CircleRule { angles, weights }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.angles.iter().copied().zip(self.weights.iter().copied())
    }
}

fn graded_per_panel(order: usize) -> usize {
    (order / 32).max(2)
}

/// Running mean and variance (Welford) for Monte Carlo estimates.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &MeanVar) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact through degree 2n - 1
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 2.0 / deg as f64 } else { 0.0 };
            let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            assert!((approx - exact).abs() < 1e-12, "n={n}: {approx} vs {exact}");
        }
    }

    #[test]
    fn circle_rules_have_unit_mass() {
        assert!((CircleRule::uniform(7).weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for delta in [1.0, 1e-3, 1e-12] {
            let r = CircleRule::graded(256, 0.3, delta);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            // trigonometric moments vanish
            let c: f64 = r.iter().map(|(a, w)| w * (2.0 * a).cos()).sum();
            assert!(c.abs() < 1e-10, "delta={delta}: {c}");
        }
    }

    #[test]
    fn graded_rule_resolves_narrow_peak() {
        // int (d^2 + sin^2)^{-1/2} over the circle, normalised; closed form
        // 2 K(-1/d^2) / (pi d) is avoided: compare against a much finer rule
        let d: f64 = 1e-5;
        let f = |a: f64| 1.0 / (d * d + a.sin().powi(2)).sqrt();
        let coarse: f64 = CircleRule::graded(DEFAULT_CIRCLE_ORDER, 0.0, d).iter().map(|(a, w)| w * f(a)).sum();
        let fine: f64 = CircleRule::graded(2048, 0.0, d).iter().map(|(a, w)| w * f(a)).sum();
        assert!(((coarse - fine) / fine).abs() < 1e-9, "{coarse} vs {fine}");
    }

    #[test]
    fn meanvar_merge_matches_sequential() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = MeanVar::default();
        xs.iter().for_each(|x| all.push(*x));
        let (mut a, mut b) = (MeanVar::default(), MeanVar::default());
        xs[..37].iter().for_each(|x| a.push(*x));
        xs[37..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        assert!((a.mean() - all.mean()).abs() < 1e-15);
        assert!((a.variance() - all.variance()).abs() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::gauss_circle(0).validate().is_err());
        assert!(QuadratureSpec::monte_carlo(1, 0).validate().is_err());
        assert!(QuadratureSpec::product_gauss(vec![]).validate().is_err());
        assert!(QuadratureSpec::default().with_radius(-1.0).validate().is_err());
        assert!(QuadratureSpec::default().validate().is_ok());
    }
}
