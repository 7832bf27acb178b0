//! Gauss–Legendre panels on geometrically graded meshes.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_ORDER: usize = 64;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

fn compute_gl(m: usize) -> GaussLegendre {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    GaussLegendre { x, w }
}

/// Cached m-point rule, 1 ≤ m ≤ 64.
pub fn gauss_legendre(m: usize) -> &'static GaussLegendre {
    static TABLE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let t = TABLE.get_or_init(|| (0..=MAX_ORDER).map(|m| if m == 0 { GaussLegendre { x: vec![], w: vec![] } } else { compute_gl(m) }).collect());
    assert!((1..=MAX_ORDER).contains(&m), "Gauss-Legendre order {m} out of range");
    &t[m]
}

/// A composite rule: explicit nodes and weights.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn push_panel(&mut self, a: f64, b: f64, order: usize) {
        let gl = gauss_legendre(order);
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        for (x, w) in gl.x.iter().zip(&gl.w) {
            self.nodes.push(c + h * x);
            self.weights.push(h * w);
        }
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Breakpoints of [a, b] with dyadic grading toward each flagged end.
pub fn graded_breaks(a: f64, b: f64, left: bool, right: bool, levels: usize, pieces: usize) -> Vec<f64> {
    let pieces = pieces.max(if left && right { 2 } else { 1 });
    let d = (b - a) / pieces as f64;
    let mut pts: Vec<f64> = (0..=pieces).map(|i| a + d * i as f64).collect();
    pts[pieces] = b;
    let floor = 4.0 * f64::EPSILON;
    if left {
        let mut k = 1;
        while k <= levels {
            let x = a + d * 0.5f64.powi(k as i32);
            if (x - a) <= floor * a.abs() {
                break;
            }
            pts.push(x);
            k += 1;
        }
    }
    if right {
        let mut k = 1;
        while k <= levels {
            let x = b - d * 0.5f64.powi(k as i32);
            if (b - x) <= floor * b.abs() {
                break;
            }
            pts.push(x);
            k += 1;
        }
    }
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    pts
}

/// Composite Gauss rule on the given breakpoints, each panel split into `sub` parts.
pub fn rule_on_breaks(breaks: &[f64], order: usize, sub: usize) -> Rule {
    let mut r = Rule::default();
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        let h = (b - a) / sub as f64;
        for j in 0..sub {
            r.push_panel(a + h * j as f64, a + h * (j + 1) as f64, order);
        }
    }
    r
}

/// Refinement ladder used by [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Level {
    pub levels: usize,
    pub order: usize,
    pub pieces: usize,
    pub sub: usize,
}

pub const LADDER: [Level; 4] = [
    Level { levels: 60, order: 16, pieces: 4, sub: 1 },
    Level { levels: 90, order: 24, pieces: 8, sub: 2 },
    Level { levels: 120, order: 32, pieces: 16, sub: 3 },
    Level { levels: 160, order: 40, pieces: 32, sub: 4 },
];

pub fn graded_rule(a: f64, b: f64, left: bool, right: bool, lv: Level) -> Rule {
    rule_on_breaks(&graded_breaks(a, b, left, right, lv.levels, lv.pieces), lv.order, lv.sub)
}

/// Value with an error estimate from two successive refinements.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

/// Adaptive graded quadrature: refine until two successive estimates differ
/// by less than `tol` (absolute).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, left: bool, right: bool, tol: f64, what: &str) -> Result<Estimate> {
    let mut prev = graded_rule(a, b, left, right, LADDER[0]).apply(&f);
    let mut err = f64::INFINITY;
    for lv in &LADDER[1..] {
        let cur = graded_rule(a, b, left, right, *lv).apply(&f);
        err = (cur - prev).abs();
        if err < tol {
            return Ok(Estimate { value: cur, err });
        }
        prev = cur;
    }
    Err(Error::Quadrature { what: what.to_string(), estimate: err })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exact_for_polynomials() {
        let gl = gauss_legendre(10);
        let s: f64 = gl.x.iter().zip(&gl.w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-15);
        let one: f64 = gauss_legendre(1).w.iter().sum();
        assert!((one - 2.0).abs() < 1e-15);
    }

    #[test]
    fn graded_endpoint_singularities() {
        // ∫_0^1 x^{-1/2} (1-x)^{-1/2} dx = π, split so each singular end
        // sits at an exact zero of the integration variable
        let exact = PI;
        let f = |x: f64, y: f64| x.powf(-0.5) * y.powf(-0.5);
        let a = integrate(|x| f(x, 1.0 - x), 0.0, 0.5, true, false, 1e-10, "beta").unwrap();
        let b = integrate(|y| f(1.0 - y, y), 0.0, 0.5, true, false, 1e-10, "beta").unwrap();
        let v = a.value + b.value;
        assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
    }
}
