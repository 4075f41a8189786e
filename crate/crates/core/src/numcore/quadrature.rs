//! Expectations under the standard normal law.
//!
//! Gauss–Hermite nodes come from Newton iteration on the orthonormal
//! Hermite recurrence, which keeps small tail weights accurate to full
//! relative precision. Integrands with kinks use a composite
//! Gauss–Legendre rule weighted by the normal density instead.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numcore::sum::weighted_sum;

pub const DEFAULT_ORDER: usize = 40;
/// Half-width of the truncated support for composite rules.
pub const COMPOSITE_HALF_WIDTH: f64 = 12.0;
const COMPOSITE_PANEL: f64 = 0.5;
const COMPOSITE_NODES: usize = 20;

/// Nodes and positive weights for `E[f(Z)]`, `Z ~ N(0,1)`. Weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss–Hermite rule of the given order, exact through degree `2·order − 1`.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be at least 1".into()));
        }
        let (x, w) = hermite_physicists(order);
        let nodes = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let weights = w.iter().map(|v| v / PI.sqrt()).collect();
        Ok(Self::normalized(order, nodes, weights))
    }

    /// Composite Gauss–Legendre on `[-12, 12]` with panel edges at every
    /// breakpoint. Falls back to Gauss–Hermite when there are none.
    pub fn for_kinks(breakpoints: &[f64]) -> Self {
        if breakpoints.is_empty() {
            return Self::gauss_hermite(DEFAULT_ORDER).expect("order > 0");
        }
        Self::composite(&uniform_edges(COMPOSITE_PANEL, breakpoints), COMPOSITE_NODES)
    }

    /// Composite rule for a Gaussian bump of standard deviation `width` centred at `center`.
    /// Panels are refined around the bump so narrow bumps stay resolved.
    pub fn for_bump(center: f64, width: f64) -> Self {
        Self::for_kinks(&Self::bump_edges(center, width))
    }

    /// Extra panel edges resolving a bump: the centre and 24 half-width steps each side.
    pub fn bump_edges(center: f64, width: f64) -> Vec<f64> {
        let mut extra = vec![center];
        if width.is_finite() && width > 0.0 {
            for i in 1..=24 {
                let off = width * 0.5 * i as f64;
                extra.push(center - off);
                extra.push(center + off);
            }
        }
        extra
    }

    /// Gauss–Legendre with `per_panel` nodes on each interval between sorted edges,
    /// each weight multiplied by the standard normal density.
    pub fn composite(edges: &[f64], per_panel: usize) -> Self {
        let (gx, gw) = legendre(per_panel);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for e in edges.windows(2) {
            let (a, b) = (e[0], e[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                let z = mid + half * x;
                nodes.push(z);
                weights.push(w * half * (-0.5 * z * z).exp() / (2.0 * PI).sqrt());
            }
        }
        Self::normalized(per_panel, nodes, weights)
    }

    fn normalized(order: usize, nodes: Vec<f64>, mut weights: Vec<f64>) -> Self {
        let total = crate::numcore::sum::pairwise_sum(&weights);
        for w in &mut weights {
            *w /= total;
        }
        Self { order, nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut vals = Vec::with_capacity(self.nodes.len());
        for &z in &self.nodes {
            let v = f(z);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { node: z });
            }
            vals.push(v);
        }
        Ok(weighted_sum(&self.weights, &vals))
    }
}

/// `E[f(Z)]` with a Gauss–Hermite rule of the given order.
pub fn gh_expect(f: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
    QuadratureRule::gauss_hermite(order)?.expect(f)
}

/// `E[Z^p]` for the standard normal: 0 for odd p, `(p−1)!!` for even p.
pub fn normal_moment(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    (1..p).step_by(2).map(f64::from).product()
}

fn uniform_edges(panel: f64, extra: &[f64]) -> Vec<f64> {
    let l = COMPOSITE_HALF_WIDTH;
    let steps = (2.0 * l / panel).round() as usize;
    let mut edges: Vec<f64> = (0..=steps).map(|i| -l + panel * i as f64).collect();
    edges.extend(extra.iter().copied().filter(|b| b.abs() < l));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    edges
}

/// Nodes and weights for `∫ f(x) e^{-x²} dx`.
fn hermite_physicists(n: usize) -> (Vec<f64>, Vec<f64>) {
    const EPS: f64 = 1e-15;
    const MAXIT: usize = 100;
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..MAXIT {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre on `[-1, 1]`.
fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_moments() {
        assert!((gh_expect(|_| 1.0, 5).unwrap() - 1.0).abs() < 1e-15);
        assert!((gh_expect(|z| z.powi(4), 3).unwrap() - 3.0).abs() < 1e-13);
        assert!((gh_expect(|z| z.powi(8), 5).unwrap() - 105.0).abs() < 1e-11);
    }

    #[test]
    fn order_one_is_the_mean() {
        let r = QuadratureRule::gauss_hermite(1).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.nodes[0].abs() < 1e-15);
        assert!(gh_expect(|_| 1.0, 0).is_err());
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = gh_expect(|z| if z > 0.0 { f64::INFINITY } else { 0.0 }, 4);
        assert!(matches!(r, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn weights_positive_and_symmetric() {
        let r = QuadratureRule::gauss_hermite(DEFAULT_ORDER).unwrap();
        assert!(r.weights.iter().all(|w| *w > 0.0));
        for i in 0..r.len() {
            assert!((r.nodes[i] + r.nodes[r.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn kinked_rule_handles_relu_moments() {
        // E[max(0,Z)²] = 1/2, E[Z·max(0,Z)] = 1/2, E[max(0,Z)] = 1/√(2π)
        let r = QuadratureRule::for_kinks(&[0.0]);
        let relu = |z: f64| z.max(0.0);
        assert!((r.expect(|z| relu(z).powi(2)).unwrap() - 0.5).abs() < 1e-13);
        assert!((r.expect(|z| z * relu(z)).unwrap() - 0.5).abs() < 1e-13);
        assert!((r.expect(relu).unwrap() - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!((r.expect(|z| z.powi(8)).unwrap() - 105.0).abs() < 1e-9);
    }

    #[test]
    fn bump_rule_resolves_narrow_gaussian() {
        // E[exp(-a Z²)] = (1+2a)^{-1/2}
        for a in [0.5, 50.0, 5e4] {
            let r = QuadratureRule::for_bump(0.0, (2.0f64 * a).sqrt().recip());
            let got = r.expect(|z| (-a * z * z).exp()).unwrap();
            assert!((got - (1.0 + 2.0 * a).powf(-0.5)).abs() < 1e-12, "a={a} got={got}");
        }
    }

    proptest! {
        #[test]
        fn monomial_exactness(order in 1usize..=60, p_frac in 0.0f64..1.0) {
            let p = ((2 * order - 1) as f64 * p_frac).floor() as u32;
            let got = gh_expect(|z| z.powi(p as i32), order).unwrap();
            let want = normal_moment(p);
            if want == 0.0 {
                // odd moments cancel; scale by the size of the even neighbour
                prop_assert!(got.abs() <= 1e-10 * normal_moment(p + 1).max(1.0));
            } else {
                prop_assert!((got - want).abs() <= 1e-10 * want, "p={} order={} got={} want={}", p, order, got, want);
            }
        }
    }
}
