//! Smoothed fundamental solution Γ, its image γ = (-Δ)^sΓ, and desk checks
//! of the mean-value and scaling-limit facts built on them.
//!
//! The radial profile ψ of Γ has three pieces: a cap `a - b r²` on (0, 1/2),
//! a concave bridge on [1/2, r̄] and `φ_κ = φ - κθ(1-r)` from r̄ on, where
//! φ = C_{n,-s} r^{-(n-2s)} and θ(x) = exp(-1/x). The bridge is
//! `ψ'' = -exp(h)` with h linear plus two sine modes, so concavity holds by
//! construction; the modes are fixed by Newton so that value and slope match
//! at r̄.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::SphereKernel;
use crate::quad::{gauss_legendre, graded_breaks, Rule};
use crate::specfun::{riesz_constant, riesz_potential_constant, sphere_area, Order};

pub const CERT_NODES: usize = 10_000;
pub const C1_TOL: f64 = 1e-10;
pub const C2_TOL: f64 = 1e-8;
pub const MASS_TOL: f64 = 1e-3;
pub const MEAN_VALUE_TOL: f64 = 1e-8;
/// Relative slack for comparisons that are exact equalities on part of the grid.
pub const ROUNDING_TOL: f64 = 1e-14;
const C_PHI_SAFETY: f64 = 1.1;
const MAX_DOUBLINGS: u32 = 60;
const BRIDGE_PANELS: usize = 64;
/// Beyond this radius γ is replaced by its two-term multipole expansion.
const FAR_FIELD: f64 = 1e4;
const FAR_END: f64 = 1e12;
/// Width next to the diagonal closed by the leading power law.
const H_CUT: f64 = 1e-6;

fn theta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn dtheta(x: f64) -> f64 {
    let t = theta(x);
    if t == 0.0 {
        0.0
    } else {
        t / (x * x)
    }
}

fn d2theta(x: f64) -> f64 {
    let t = theta(x);
    if t == 0.0 {
        0.0
    } else {
        t * (1.0 / x - 2.0) / (x * x * x)
    }
}

/// θ''/θ' and θ'/θ at x > 0, without underflow.
fn theta_ratios(x: f64) -> (f64, f64) {
    (1.0 / (x * x) - 2.0 / x, 1.0 / (x * x))
}

/// φ(r) = c r^{-m}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Power {
    pub c: f64,
    pub m: f64,
}

impl Power {
    pub fn new(order: &Order) -> Result<Self> {
        Ok(Self { c: riesz_potential_constant(order.n, order.s)?, m: order.nf() - 2.0 * order.s })
    }

    pub fn f(&self, r: f64) -> f64 {
        self.c * r.powf(-self.m)
    }

    pub fn d1(&self, r: f64) -> f64 {
        -self.c * self.m * r.powf(-self.m - 1.0)
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.c * self.m * (self.m + 1.0) * r.powf(-self.m - 2.0)
    }

    pub fn d3(&self, r: f64) -> f64 {
        -self.c * self.m * (self.m + 1.0) * (self.m + 2.0) * r.powf(-self.m - 3.0)
    }

    /// (φ')^{-1}(y) for y < 0.
    pub fn inv_d1(&self, y: f64) -> f64 {
        (self.c * self.m / -y).powf(1.0 / (self.m + 1.0))
    }
}

/// Output of [`choose_kappa`] with the four certified margins.
#[derive(Debug, Clone, Serialize)]
pub struct KappaChoice {
    pub kappa: f64,
    pub r_bar: f64,
    pub c_phi: f64,
    pub doublings: u32,
    /// φ'_κ(1/2) - φ'(1)
    pub margin_a: f64,
    /// -φ''_κ(r̄)
    pub margin_b: f64,
    /// min over (r̄, 1) of θ''/θ'(1-r) - C_φ
    pub margin_c: f64,
    /// min over (r̄, 1) of θ'/θ(1-r) + φ'/φ(r)
    pub margin_d: f64,
}

fn dphi_kappa(phi: &Power, kappa: f64, r: f64) -> f64 {
    phi.d1(r) + kappa * dtheta(1.0 - r)
}

fn d2phi_kappa(phi: &Power, kappa: f64, r: f64) -> f64 {
    phi.d2(r) - kappa * d2theta(1.0 - r)
}

/// Bound C_φ on minus the difference quotient (φ''(r₁)-φ''(r₀))/(φ'(r₁)-φ'(r₀))
/// over 1/2 < r₀ < r₁ < 1: grid maximum (diagonal included) times 1.1.
fn difference_quotient_bound(phi: &Power) -> f64 {
    let m = 400;
    let rs: Vec<f64> = (0..=m).map(|i| 0.5 + 0.5 * i as f64 / m as f64).collect();
    let mut worst = rs.iter().map(|&r| -phi.d3(r) / phi.d2(r)).fold(f64::MIN, f64::max);
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            let q = (phi.d2(rs[j]) - phi.d2(rs[i])) / (phi.d1(rs[j]) - phi.d1(rs[i]));
            worst = worst.max(-q);
        }
    }
    C_PHI_SAFETY * worst.max(0.0)
}

fn certify_kappa(phi: &Power, kappa: f64, c_phi: f64, nodes: usize) -> Option<(f64, [f64; 4])> {
    let target = phi.d1(1.0);
    let margin_a = dphi_kappa(phi, kappa, 0.5) - target;
    if margin_a <= 0.0 {
        return None;
    }
    let grid: Vec<f64> = (0..=nodes).map(|i| 0.5 + 0.5 * i as f64 / nodes as f64).collect();
    let g = |r: f64| dphi_kappa(phi, kappa, r) - target;
    // largest root: scan down from r = 1 to the first sign change
    let mut hi = None;
    for i in (0..nodes).rev() {
        if g(grid[i]) >= 0.0 {
            hi = Some(i);
            break;
        }
    }
    let i = hi?;
    let (mut lo, mut up) = (grid[i], grid[i + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let r_bar = lo;
    let margin_b = -d2phi_kappa(phi, kappa, r_bar);
    let mut margin_c = f64::INFINITY;
    let mut margin_d = f64::INFINITY;
    for &r in std::iter::once(&r_bar).chain(grid.iter().filter(|&&r| r > r_bar && r < 1.0)) {
        let (q2, q1) = theta_ratios(1.0 - r);
        margin_c = margin_c.min(q2 - c_phi);
        margin_d = margin_d.min(q1 + phi.d1(r) / phi.f(r));
    }
    Some((r_bar, [margin_a, margin_b, margin_c, margin_d]))
}

/// Doubles κ from 1 until the four smoothing conditions hold on a grid of
/// `nodes` points over [1/2, 1].
pub fn choose_kappa(order: &Order, nodes: usize) -> Result<KappaChoice> {
    let phi = Power::new(order)?;
    let c_phi = difference_quotient_bound(&phi);
    let mut kappa = 1.0;
    let mut last = String::from("condition (a) never held");
    for doublings in 0..=MAX_DOUBLINGS {
        if let Some((r_bar, m)) = certify_kappa(&phi, kappa, c_phi, nodes) {
            if m.iter().all(|&x| x > 0.0) {
                return Ok(KappaChoice {
                    kappa,
                    r_bar,
                    c_phi,
                    doublings,
                    margin_a: m[0],
                    margin_b: m[1],
                    margin_c: m[2],
                    margin_d: m[3],
                });
            }
            last = format!("r_bar = {r_bar}, margins (a..d) = {m:?}");
        }
        kappa *= 2.0;
    }
    Err(Error::Domain(format!("no kappa up to 2^60 passes the smoothing conditions; last: {last}")))
}

/// ψ'' = -exp(h) on the bridge, tabulated by panel.
#[derive(Debug, Clone, Serialize)]
pub struct Bridge {
    pub left: f64,
    pub right: f64,
    pub h_left: f64,
    pub h_right: f64,
    pub modes: [f64; 2],
    /// Panel starts with ψ and ψ' there.
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl Bridge {
    fn h(&self, t: f64) -> f64 {
        let x = (t - self.left) / (self.right - self.left);
        (1.0 - x) * self.h_left + x * self.h_right + self.modes[0] * (PI * x).sin() + self.modes[1] * (2.0 * PI * x).sin()
    }

    fn d2(&self, t: f64) -> f64 {
        -self.h(t).exp()
    }

    fn panel(&self, t: f64) -> usize {
        let k = ((t - self.left) / (self.right - self.left) * BRIDGE_PANELS as f64).floor();
        (k.max(0.0) as usize).min(BRIDGE_PANELS - 1)
    }

    /// (ψ, ψ') at t from the nearest tabulated panel start.
    fn eval(&self, t: f64) -> (f64, f64) {
        let j = self.panel(t);
        let t0 = self.nodes[j];
        let gl = gauss_legendre(20);
        let (c, hw) = ((t + t0) / 2.0, (t - t0) / 2.0);
        let (mut i0, mut i1) = (0.0, 0.0);
        for (x, w) in gl.x.iter().zip(&gl.w) {
            let u = c + hw * x;
            let g = self.d2(u);
            i0 += w * g;
            i1 += w * (t - u) * g;
        }
        (self.values[j] + self.slopes[j] * (t - t0) + hw * i1, self.slopes[j] + hw * i0)
    }

    fn build(left: f64, right: f64, h_left: f64, h_right: f64, modes: [f64; 2], v0: f64, d0: f64) -> Self {
        let mut b = Self { left, right, h_left, h_right, modes, nodes: vec![], values: vec![], slopes: vec![] };
        let w = (right - left) / BRIDGE_PANELS as f64;
        let gl = gauss_legendre(24);
        let (mut v, mut d) = (v0, d0);
        for j in 0..=BRIDGE_PANELS {
            let t0 = left + w * j as f64;
            b.nodes.push(if j == BRIDGE_PANELS { right } else { t0 });
            b.values.push(v);
            b.slopes.push(d);
            if j == BRIDGE_PANELS {
                break;
            }
            let t1 = if j + 1 == BRIDGE_PANELS { right } else { t0 + w };
            let (c, hw) = ((t0 + t1) / 2.0, (t1 - t0) / 2.0);
            let (mut i0, mut i1) = (0.0, 0.0);
            for (x, wt) in gl.x.iter().zip(&gl.w) {
                let u = c + hw * x;
                let g = b.d2(u);
                i0 += wt * g;
                i1 += wt * (t1 - u) * g;
            }
            v += d * (t1 - t0) + hw * i1;
            d += hw * i0;
        }
        b
    }
}

/// Moments (∫g dx, ∫(1-x)g dx) of g = -exp(h) over x ∈ [0, 1], plus their
/// derivatives in the two mode amplitudes.
fn bridge_moments(h_left: f64, h_right: f64, modes: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let gl = gauss_legendre(24);
    let panels = 8;
    let mut f = [0.0; 2];
    let mut j = [[0.0; 2]; 2];
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        let (c, hw) = ((a + b) / 2.0, (b - a) / 2.0);
        for (x, w) in gl.x.iter().zip(&gl.w) {
            let x = c + hw * x;
            let basis = [(PI * x).sin(), (2.0 * PI * x).sin()];
            let h = (1.0 - x) * h_left + x * h_right + modes[0] * basis[0] + modes[1] * basis[1];
            let g = -h.exp() * w * hw;
            f[0] += g;
            f[1] += (1.0 - x) * g;
            for k in 0..2 {
                j[0][k] += g * basis[k];
                j[1][k] += (1.0 - x) * g * basis[k];
            }
        }
    }
    (f, j)
}

/// Newton for the mode amplitudes so that the moments equal `target`.
fn solve_modes(h_left: f64, h_right: f64, target: [f64; 2]) -> Option<[f64; 2]> {
    let scale = [target[0].abs(), target[1].abs()];
    let resid = |modes: [f64; 2]| {
        let (f, jac) = bridge_moments(h_left, h_right, modes);
        ([(f[0] - target[0]) / scale[0], (f[1] - target[1]) / scale[1]], jac)
    };
    let mut modes = [0.0, 0.0];
    let (mut r, mut jac) = resid(modes);
    for _ in 0..200 {
        let norm = r[0].hypot(r[1]);
        if norm < 1e-15 {
            return Some(modes);
        }
        let a = [[jac[0][0] / scale[0], jac[0][1] / scale[0]], [jac[1][0] / scale[1], jac[1][1] / scale[1]]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let step = [(r[0] * a[1][1] - r[1] * a[0][1]) / det, (a[0][0] * r[1] - a[1][0] * r[0]) / det];
        let mut lam = 1.0;
        loop {
            let trial = [modes[0] - lam * step[0], modes[1] - lam * step[1]];
            let (rt, jt) = resid(trial);
            if rt[0].hypot(rt[1]) < norm || lam < 1e-6 {
                modes = trial;
                r = rt;
                jac = jt;
                break;
            }
            lam /= 2.0;
        }
    }
    (r[0].hypot(r[1]) < 1e-13).then_some(modes)
}

/// Radial generator ψ of Γ.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothProfile {
    pub n: u32,
    pub s: f64,
    pub kappa: f64,
    pub r_bar: f64,
    /// (a, b) of the cap ψ = a - b r².
    pub cap: (f64, f64),
    pub bridge: Bridge,
    pub phi: Power,
    pub choice: KappaChoice,
}

impl SmoothProfile {
    pub fn order(&self) -> Order {
        Order { n: self.n, s: self.s }
    }

    pub fn psi(&self, r: f64) -> f64 {
        let (a, b) = self.cap;
        if r < 0.5 {
            a - b * r * r
        } else if r < self.r_bar {
            self.bridge.eval(r).0
        } else {
            self.phi.f(r) - self.kappa * theta(1.0 - r)
        }
    }

    pub fn dpsi(&self, r: f64) -> f64 {
        if r < 0.5 {
            -2.0 * self.cap.1 * r
        } else if r < self.r_bar {
            self.bridge.eval(r).1
        } else {
            dphi_kappa(&self.phi, self.kappa, r)
        }
    }

    pub fn d2psi(&self, r: f64) -> f64 {
        if r < 0.5 {
            -2.0 * self.cap.1
        } else if r < self.r_bar {
            self.bridge.d2(r)
        } else {
            d2phi_kappa(&self.phi, self.kappa, r)
        }
    }

    /// ψ'(r) - φ'(r), exact on the tail where it equals κθ'(1-r).
    fn slope_excess(&self, r: f64) -> f64 {
        if r >= self.r_bar {
            self.kappa * dtheta(1.0 - r)
        } else {
            self.dpsi(r) - self.phi.d1(r)
        }
    }

    /// φ(r) - ψ(r), exact on the tail where it equals κθ(1-r).
    pub fn value_excess(&self, r: f64) -> f64 {
        if r >= self.r_bar {
            self.kappa * theta(1.0 - r)
        } else {
            self.phi.f(r) - self.psi(r)
        }
    }

    /// Q(r) = φ(r + δ) - ψ(r), split as (φ(r+δ) - φ(r)) + (φ(r) - ψ(r)) so
    /// that both parts keep relative precision when δ and r̄ < r < 1 shrink it.
    pub fn touching_gap(&self, r: f64, delta: f64) -> f64 {
        self.phi.f(r) * (-self.phi.m * (delta / r).ln_1p()).exp_m1() + self.value_excess(r)
    }

    /// F(r) - r with F = (φ')^{-1}∘ψ'; on the tail through κθ'(1-r)/|φ'(r)|
    /// so that it stays accurate as F(r) → r.
    pub fn f_gap(&self, r: f64) -> f64 {
        if r >= self.r_bar {
            let eps = self.slope_excess(r) / -self.phi.d1(r);
            r * (-(-eps).ln_1p() / (self.phi.m + 1.0)).exp_m1()
        } else {
            self.phi.inv_d1(self.dpsi(r)) - r
        }
    }

    /// φ''(F(r)) - ψ''(r); on the tail as κθ''(1-r) + (φ''(r+g) - φ''(r)).
    pub fn property5_margin(&self, r: f64) -> f64 {
        let g = self.f_gap(r);
        if r >= self.r_bar {
            let shift = self.phi.d2(r) * (-(self.phi.m + 2.0) * (g / r).ln_1p()).exp_m1();
            self.kappa * d2theta(1.0 - r) + shift
        } else {
            self.phi.d2(r + g) - self.d2psi(r)
        }
    }

    /// Γ_λ(r) = Γ(r/λ)λ^{-(n-2s)}.
    pub fn gamma_lambda(&self, lambda: f64, r: f64) -> f64 {
        self.psi(r / lambda) * lambda.powf(-self.phi.m)
    }

    /// Left/right defects in (value, slope, curvature) at 1/2 and r̄.
    pub fn matching_defects(&self) -> [[f64; 3]; 2] {
        let (a, b) = self.cap;
        let br = &self.bridge;
        let last = BRIDGE_PANELS;
        let at_half = [
            (a - b / 4.0 - br.values[0]).abs(),
            (-b - br.slopes[0]).abs(),
            (-2.0 * b - br.d2(0.5)).abs(),
        ];
        let r = self.r_bar;
        let at_bar = [
            (br.values[last] - (self.phi.f(r) - self.kappa * theta(1.0 - r))).abs(),
            (br.slopes[last] - dphi_kappa(&self.phi, self.kappa, r)).abs(),
            (br.d2(r) - d2phi_kappa(&self.phi, self.kappa, r)).abs(),
        ];
        [at_half, at_bar]
    }
}

/// Builds ψ: b is halved from |φ'(1)|/4 until the bridge solve succeeds; a is
/// set so the bridge curvature has its centroid at the midpoint, which puts
/// both tangent conditions strictly inside their range.
pub fn build_psi(order: &Order, choice: &KappaChoice) -> Result<SmoothProfile> {
    let phi = Power::new(order)?;
    let (kappa, r_bar) = (choice.kappa, choice.r_bar);
    let len = r_bar - 0.5;
    let v_bar = phi.f(r_bar) - kappa * theta(1.0 - r_bar);
    let d_bar = dphi_kappa(&phi, kappa, r_bar);
    let c2 = -d2phi_kappa(&phi, kappa, r_bar);
    if !(c2 > 0.0 && v_bar > 0.0) {
        return Err(Error::Domain(format!("build_psi: psi''(r_bar) = {} and psi(r_bar) = {v_bar} must be negative and positive", -c2)));
    }
    let mut b = -phi.d1(1.0) / 4.0;
    let mut why = String::new();
    for _ in 0..40 {
        let i0 = d_bar + b;
        let i1 = 0.5 * len * i0;
        let a = v_bar + b / 4.0 + len * b - i1;
        // ψ(1/2) + (r̄-1/2)ψ'(1/2) ≥ ψ(r̄) and ψ(r̄) + (1/2-r̄)ψ'(r̄) ≥ ψ(1/2)
        let psi_half = a - b / 4.0;
        let cond3 = psi_half + len * -b - v_bar;
        let cond4 = v_bar - len * d_bar - psi_half;
        if !(i0 < 0.0 && cond3 > 0.0 && cond4 > 0.0) {
            why = format!("tangent conditions failed at b = {b}: ({cond3}, {cond4})");
            b /= 2.0;
            continue;
        }
        let (h_left, h_right) = ((2.0 * b).ln(), c2.ln());
        match solve_modes(h_left, h_right, [i0 / len, i1 / (len * len)]) {
            Some(modes) => {
                let bridge = Bridge::build(0.5, r_bar, h_left, h_right, modes, psi_half, -b);
                let prof = SmoothProfile {
                    n: order.n,
                    s: order.s,
                    kappa,
                    r_bar,
                    cap: (a, b),
                    bridge,
                    phi,
                    choice: choice.clone(),
                };
                let d = prof.matching_defects();
                if d.iter().all(|x| x[0] <= C1_TOL && x[1] <= C1_TOL && x[2] <= C2_TOL) {
                    return Ok(prof);
                }
                why = format!("matching defects {d:?} at b = {b}");
            }
            None => why = format!("bridge Newton failed at b = {b}"),
        }
        b /= 2.0;
    }
    Err(Error::Domain(format!("build_psi: bisection on b exhausted; {why}")))
}

/// Grid certification of ψ against the smoothing lemma and its consequences.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub nodes: usize,
    pub min_psi: f64,
    pub max_dpsi: f64,
    pub max_d2psi_inner: f64,
    pub tail_identical: bool,
    pub matching: [[f64; 3]; 2],
    /// min of φ - ψ and ψ' - φ'.
    pub comparison_margin: (f64, f64),
    /// min over (0,1) of φ''(F(r)) - ψ''(r), resolvable nodes only.
    pub property5_margin: f64,
    /// Nodes next to r = 1 where ψ' and φ' agree to rounding.
    pub unresolved_nodes: usize,
    pub unresolved_from: f64,
    pub f_gap_min: f64,
    pub f_gap_decreasing: bool,
    pub near_one_gap: f64,
    /// min over [r̄, 1] of ψ'/ψ - φ'/φ, and the factored margin θ'/θ + φ'/φ.
    pub property6_direct: f64,
    pub property6_margin: f64,
    /// (r₀, r₁, grid argmin of φ(r + r₁ - r₀) - ψ(r)).
    pub touching: Vec<(f64, f64, f64)>,
    pub touching_cell: f64,
    pub scale_ratio_min: f64,
}

pub fn touching_points() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=19).map(|k| 0.05 * k as f64).collect();
    v.push(0.975);
    v
}

fn fail(property: &str, r: f64, value: f64) -> Error {
    Error::Domain(format!("{property} violated at r = {r} (value {value:e})"))
}

/// Runs every grid check on `nodes` nodes; the first violation is returned as
/// an error naming the property and location.
pub fn verify_lemma_properties(p: &SmoothProfile, nodes: usize) -> Result<LemmaReport> {
    let outer = 4.0;
    let grid: Vec<f64> = (1..=nodes).map(|i| outer * i as f64 / nodes as f64).collect();
    let unit: Vec<f64> = (1..nodes).map(|i| i as f64 / nodes as f64).collect();
    let phi = p.phi;

    let rows: Vec<(f64, f64, f64, f64, f64)> = grid
        .par_iter()
        .map(|&r| (r, p.psi(r), p.dpsi(r), p.d2psi(r), phi.f(r)))
        .collect();
    let mut min_psi = f64::INFINITY;
    let mut max_dpsi = f64::MIN;
    let mut max_d2 = f64::MIN;
    let mut tail_identical = true;
    let mut cmp = (f64::INFINITY, f64::INFINITY);
    for &(r, v, d, d2, f) in &rows {
        if v <= 0.0 {
            return Err(fail("psi > 0", r, v));
        }
        if d >= 0.0 {
            return Err(fail("psi' < 0", r, d));
        }
        min_psi = min_psi.min(v);
        max_dpsi = max_dpsi.max(d);
        if r <= p.r_bar {
            if d2 >= 0.0 {
                return Err(fail("psi'' < 0 on (0, r_bar]", r, d2));
            }
            max_d2 = max_d2.max(d2);
        }
        if r >= 1.0 && (v != f || d != phi.d1(r)) {
            tail_identical = false;
        }
        cmp.0 = cmp.0.min(f - v);
        cmp.1 = cmp.1.min(d - phi.d1(r));
    }
    if !tail_identical {
        return Err(Error::Domain("psi = phi on [1, inf) violated".into()));
    }
    if cmp.0 < 0.0 || cmp.1 < 0.0 {
        return Err(Error::Domain(format!("consequence (1) violated: min(phi - psi, psi' - phi') = {cmp:?}")));
    }

    // property (5) and F on (0, 1); next to r = 1, κθ'(1-r) underflows and
    // ψ' = φ' in floating point
    let per: Vec<(f64, f64, Option<f64>)> = unit
        .par_iter()
        .map(|&r| {
            let resolvable = p.slope_excess(r) > 0.0;
            let gap = p.f_gap(r);
            let m5 = resolvable.then(|| p.property5_margin(r));
            (r, gap, m5)
        })
        .collect();
    let mut p5 = f64::INFINITY;
    let mut unresolved = 0;
    let mut unresolved_from = 1.0;
    let mut f_gap_min = f64::INFINITY;
    let decreasing = true;
    let mut prev_gap = f64::INFINITY;
    for &(r, gap, m5) in &per {
        match m5 {
            Some(m) => {
                if unresolved > 0 {
                    return Err(fail("resolvable nodes contiguous", r, m));
                }
                if m <= 0.0 {
                    return Err(fail("property (5)", r, m));
                }
                p5 = p5.min(m);
                if gap <= 0.0 {
                    return Err(fail("F(r) > r", r, gap));
                }
                if gap >= prev_gap {
                    return Err(fail("F(r) - r strictly decreasing", r, gap - prev_gap));
                }
                f_gap_min = f_gap_min.min(gap);
                prev_gap = gap;
            }
            None => {
                if unresolved == 0 {
                    unresolved_from = r;
                }
                unresolved += 1;
            }
        }
    }
    if unresolved > 0 && 1.0 - unresolved_from > 1.0 / 600.0 {
        return Err(fail("resolvability near r = 1", unresolved_from, 1.0 - unresolved_from));
    }
    let near_one_gap = p.f_gap(unresolved_from.min(1.0 - 1e-3) - 1.0 / nodes as f64);

    // property (6) on [r̄, 1]
    let mut p6_direct = f64::INFINITY;
    let mut p6_margin = f64::INFINITY;
    for &r in std::iter::once(&p.r_bar).chain(unit.iter().filter(|&&r| r > p.r_bar)) {
        let direct = p.dpsi(r) / p.psi(r) - phi.d1(r) / phi.f(r);
        let (_, q1) = theta_ratios(1.0 - r);
        let margin = q1 + phi.d1(r) / phi.f(r);
        if direct < 0.0 {
            return Err(fail("property (6) psi'/psi >= phi'/phi", r, direct));
        }
        if margin <= 0.0 {
            return Err(fail("property (6) factored margin", r, margin));
        }
        p6_direct = p6_direct.min(direct);
        p6_margin = p6_margin.min(margin);
    }

    // consequence (2): φ(r + r₁ - r₀) - ψ(r) is minimal at r₀
    let span = 2.0;
    let qgrid: Vec<f64> = (1..=nodes).map(|i| span * i as f64 / nodes as f64).collect();
    let cell = span / nodes as f64;
    let touching: Vec<(f64, f64, f64)> = touching_points()
        .par_iter()
        .map(|&r0| {
            let shift = p.f_gap(r0);
            let (mut best, mut at) = (f64::INFINITY, 0.0);
            for &r in &qgrid {
                let q = p.touching_gap(r, shift);
                if q < best {
                    best = q;
                    at = r;
                }
            }
            (r0, r0 + shift, at)
        })
        .collect();
    for &(r0, _, at) in &touching {
        if (at - r0).abs() > cell {
            return Err(fail("consequence (2) touching minimum", r0, at - r0));
        }
    }

    // Γ_λ ordering through r Γ'/Γ ≥ -(n - 2s)
    let scale_ratio_min = rows.iter().map(|&(r, v, d, _, _)| r * d / v + phi.m).fold(f64::INFINITY, f64::min);
    if scale_ratio_min < -ROUNDING_TOL * phi.m {
        return Err(Error::Domain(format!("r psi'/psi >= -(n-2s) violated by {scale_ratio_min:e}")));
    }

    Ok(LemmaReport {
        nodes,
        min_psi,
        max_dpsi,
        max_d2psi_inner: max_d2,
        tail_identical,
        matching: p.matching_defects(),
        comparison_margin: cmp,
        property5_margin: p5,
        unresolved_nodes: unresolved,
        unresolved_from,
        f_gap_min,
        f_gap_decreasing: decreasing,
        near_one_gap,
        property6_direct: p6_direct,
        property6_margin: p6_margin,
        touching,
        touching_cell: cell,
        scale_ratio_min,
    })
}

/// Ordering Γ_{λ₁} ≥ Γ_{λ₂} for λ₁ < λ₂ on a 10 × 10 (λ, r) grid; returns the
/// smallest relative difference (Γ_{λ₁} - Γ_{λ₂})/Γ_{λ₂} over ordered pairs.
/// Where both equal Φ it is rounding, of order 1e-16.
pub fn gamma_ordering(p: &SmoothProfile) -> f64 {
    let lambdas: Vec<f64> = (0..10).map(|k| 0.1 * 10f64.powf(k as f64 / 9.0)).collect();
    let radii: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
    let mut worst = f64::INFINITY;
    for &r in &radii {
        for i in 0..lambdas.len() {
            for j in i + 1..lambdas.len() {
                let (g1, g2) = (p.gamma_lambda(lambdas[i], r), p.gamma_lambda(lambdas[j], r));
                worst = worst.min((g1 - g2) / g2);
            }
        }
    }
    worst
}

/// Evaluates γ = (-Δ)^sΓ: the exterior convolution formula outside B₁, the
/// radial principal-value integral inside.
#[derive(Clone)]
pub struct GammaOp {
    pub profile: SmoothProfile,
    omega: f64,
    k: f64,
    c_ns: f64,
    sphere: SphereKernel,
    /// Nodes ρ and weights C_{n,s} w (Φ-Γ)(ρ) ρ^{n-1} over (0, 1).
    rho: Vec<f64>,
    wrho: Vec<f64>,
    /// Multipole constants: γ ≈ K₀ t^{-k} + K₂ t^{-k-2}.
    pub k0: f64,
    pub k2: f64,
}

/// Breaks of [a, b] ⊂ (0, ∞): `pieces` per factor of two.
fn geometric_breaks(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    let m = (((b / a).log2() * pieces as f64).ceil() as usize).max(pieces);
    let mut v: Vec<f64> = (0..=m).map(|i| a * (b / a).powf(i as f64 / m as f64)).collect();
    v[m] = b;
    v
}

fn deficit_rule(p: &SmoothProfile) -> Rule {
    let mut r = Rule::default();
    for w in graded_breaks(0.0, 0.5, true, false, 60, 4).windows(2) {
        r.push_panel(w[0], w[1], 24);
    }
    let pieces = [(0.5, p.r_bar, 12), (p.r_bar, 1.0, 24)];
    for &(a, b, k) in &pieces {
        let d = (b - a) / k as f64;
        for j in 0..k {
            r.push_panel(a + d * j as f64, a + d * (j + 1) as f64, 24);
        }
    }
    r
}

impl GammaOp {
    pub fn new(profile: &SmoothProfile) -> Result<Self> {
        let order = profile.order();
        if order.n != 1 && order.n != 3 {
            return Err(Error::Domain(format!("gamma field is implemented for n in {{1, 3}}, got n = {}", order.n)));
        }
        let (nf, s) = (order.nf(), order.s);
        let c_ns = riesz_constant(order.n, s)?;
        let omega = sphere_area(order.n);
        let rule = deficit_rule(profile);
        let mut rho = Vec::with_capacity(rule.len());
        let mut wrho = Vec::with_capacity(rule.len());
        let (mut m0, mut m2) = (0.0, 0.0);
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            let diff = profile.value_excess(x);
            let wt = w * diff * x.powf(nf - 1.0);
            rho.push(x);
            wrho.push(c_ns * wt);
            m0 += wt;
            m2 += wt * x * x;
        }
        let k = nf + 2.0 * s;
        Ok(Self {
            profile: profile.clone(),
            omega,
            k,
            c_ns,
            sphere: SphereKernel::new(&order, 0)?,
            rho,
            wrho,
            k0: c_ns * omega * m0,
            k2: c_ns * omega * m2 * k * (k + 2.0 - nf) / (2.0 * nf),
        })
    }

    /// ∫_{|y|=ρ} |x - y|^{-k} dσ / ρ^{n-1} at |x| = t.
    fn shell_kernel(&self, t: f64, r: f64) -> f64 {
        if self.profile.n == 1 {
            (t - r).abs().powf(-self.k) + (t + r).powf(-self.k)
        } else {
            // 2π[(t-ρ)^{2-k} - (t+ρ)^{2-k}]/((k-2)tρ), as exp·expm1
            let e = 2.0 - self.k;
            let la = (t - r).ln();
            let lb = (t + r).ln();
            let diff = (e * lb).exp() * (e * (la - lb)).exp_m1();
            2.0 * PI * diff / ((self.k - 2.0) * t * r)
        }
    }

    /// C_{n,s} ∫_{B₁}(Φ-Γ)(y)|x-y|^{-(n+2s)} dy, valid for |x| ≥ 1.
    pub fn exterior(&self, t: f64) -> f64 {
        if t >= FAR_FIELD {
            return self.far(t);
        }
        self.rho.iter().zip(&self.wrho).map(|(&r, &w)| w * self.shell_kernel(t, r)).sum()
    }

    fn far(&self, t: f64) -> f64 {
        self.k0 * t.powf(-self.k) + self.k2 * t.powf(-self.k - 2.0)
    }

    /// `∫_0^1 k_0(t) B(t) dt` for the folded radial bracket at radius r, with
    /// panel breaks wherever r t or r/t crosses a join of ψ.
    fn folded_integral(&self, r: f64, order: usize, pieces: usize) -> f64 {
        let p = &self.profile;
        let (nf, s) = (p.n as f64, p.s);
        let fr = p.psi(r);
        let bracket = |t: f64| (fr - p.psi(r * t)) * t.powf(nf - 1.0) + (fr - p.psi(r / t)) * t.powf(2.0 * s - 1.0);
        let (mut near0, mut near1) = (vec![0.0, 0.5], vec![H_CUT, 0.5]);
        for j in [0.5, p.r_bar, 1.0] {
            if j == r {
                continue;
            }
            // kink at t = min(j/r, r/j); keep h = 1 - t exact for kinks near 1
            let (t, h) = if j < r { (j / r, (r - j) / r) } else { (r / j, (j - r) / j) };
            if t < 0.5 {
                near0.push(t);
            } else if h > H_CUT {
                near1.push(h);
            }
        }
        near0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        near1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = 0.0;
        for (i, w) in near0.windows(2).enumerate() {
            let rule_breaks = if i == 0 { graded_breaks(w[0], w[1], true, false, 60, pieces) } else { geometric_breaks(w[0], w[1], pieces) };
            for q in rule_breaks.windows(2) {
                let mut rule = Rule::default();
                rule.push_panel(q[0], q[1], order);
                acc += rule.apply(|t| self.sphere.eval(t, 1.0 - t).0 * bracket(t));
            }
        }
        for w in near1.windows(2) {
            let rule_breaks = geometric_breaks(w[0], w[1], pieces);
            for q in rule_breaks.windows(2) {
                let mut rule = Rule::default();
                rule.push_panel(q[0], q[1], order);
                acc += rule.apply(|h| self.sphere.eval(1.0 - h, h).0 * bracket(1.0 - h));
            }
        }
        let k_cut = self.sphere.eval(1.0 - H_CUT, H_CUT).0;
        acc + k_cut * bracket(1.0 - H_CUT) * H_CUT / (2.0 - 2.0 * s)
    }

    /// Principal-value (-Δ)^sΓ at |x| = t ≤ 1, with the gap between two
    /// rule refinements as error estimate.
    pub fn interior(&self, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("interior gamma needs t > 0, got {t}")));
        }
        let scale = self.c_ns * t.powf(-2.0 * self.profile.s);
        let coarse = self.folded_integral(t, 16, 2);
        let fine = self.folded_integral(t, 24, 3);
        Ok((scale * fine, scale * (fine - coarse).abs()))
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        if t > 1.0 {
            Ok(self.exterior(t))
        } else {
            Ok(self.interior(t)?.0)
        }
    }

    /// K₀ = C_{n,s}∫(Φ-Γ): the limit of |x|^{n+2s}γ(x).
    pub fn tail_constant(&self) -> f64 {
        self.k0
    }
}

/// Radial test functions for the mean-value property, about the base point x₀.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TestFunction {
    Constant { value: f64 },
    /// Φ(· - y) with |x₀ - y| = distance; s-harmonic away from y.
    Fundamental { distance: f64 },
    /// Γ(· - x₀); (-Δ)^s of it is γ > 0.
    Generator,
    /// -exp(-|x - x₀|²/w²), whose fractional Laplacian is negative at x₀.
    NegativeBump { width: f64 },
}

impl TestFunction {
    pub fn at_center(&self, p: &SmoothProfile) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Fundamental { distance } => p.phi.f(distance),
            TestFunction::Generator => p.psi(0.0),
            TestFunction::NegativeBump { .. } => -1.0,
        }
    }

    /// Average of u over the sphere of radius ρ around x₀; `offset` is
    /// |ρ - d| when the caller has it to full precision.
    pub fn spherical_mean(&self, p: &SmoothProfile, rho: f64, offset: Option<f64>) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Generator => p.psi(rho),
            TestFunction::NegativeBump { width } => -(-(rho / width).powi(2)).exp(),
            TestFunction::Fundamental { distance: d } => {
                let near = offset.unwrap_or((d - rho).abs());
                if p.n == 1 {
                    0.5 * (p.phi.f(d + rho) + p.phi.f(near))
                } else {
                    // (1/(2dρ)) ∫_{|d-ρ|}^{d+ρ} q φ(q) dq
                    let e = 2.0 - p.phi.m;
                    let (la, lb) = ((d + rho).ln(), near.ln());
                    let prim = if e == 0.0 { la - lb } else { ((e * la).exp() - (e * lb).exp()) / e };
                    p.phi.c * prim / (2.0 * d * rho)
                }
            }
        }
    }

    /// Radii (in ρ) where the spherical mean loses smoothness.
    fn breaks(&self, p: &SmoothProfile) -> (Vec<f64>, Vec<f64>) {
        match *self {
            TestFunction::Fundamental { distance } => (vec![distance], vec![]),
            TestFunction::Generator => (vec![], vec![0.5, p.r_bar, 1.0]),
            _ => (vec![], vec![]),
        }
    }

    fn far_value(&self) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            _ => 0.0,
        }
    }
}

/// ⟨u, γ_λ(x₀ - ·)⟩ = ω ∫_0^∞ γ(t) M_u(λt) t^{n-1} dt.
///
/// Panels touching the pole of u are generated in the offset z = |t - pole|
/// so that |d - ρ| keeps full relative precision down to the graded end.
pub fn pairing(op: &GammaOp, u: &TestFunction, lambda: f64) -> Result<f64> {
    let p = &op.profile;
    let nf = p.n as f64;
    let (singular, kinks) = u.breaks(p);
    let pole = singular.first().map(|x| x / lambda);
    let mut pts = vec![0.0, 0.5, p.r_bar, 1.0, 10.0, 100.0, 1e3, FAR_FIELD];
    pts.extend(pole);
    pts.extend(kinks.iter().map(|x| x / lambda));
    pts.retain(|&x| x <= FAR_FIELD);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));

    // (t, weight, |λt - d| when known exactly)
    let mut nodes: Vec<(f64, f64, Option<f64>)> = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = if b <= 1.0 {
            8
        } else if b / a.max(1.0) > 3.0 {
            ((b / a.max(1.0)).log2().ceil() as usize).max(2)
        } else {
            2
        };
        let side = match pole {
            Some(c) if c == a => Some(1.0),
            Some(c) if c == b => Some(-1.0),
            _ => None,
        };
        match (side, pole) {
            (Some(dir), Some(c)) => {
                for q in graded_breaks(0.0, b - a, true, false, 60, pieces).windows(2) {
                    let mut r = Rule::default();
                    r.push_panel(q[0], q[1], 20);
                    for (&z, &wt) in r.nodes.iter().zip(&r.weights) {
                        nodes.push((c + dir * z, wt, Some(lambda * z)));
                    }
                }
            }
            _ => {
                for q in graded_breaks(a, b, false, false, 0, pieces).windows(2) {
                    let mut r = Rule::default();
                    r.push_panel(q[0], q[1], 20);
                    nodes.extend(r.nodes.iter().zip(&r.weights).map(|(&t, &wt)| (t, wt, None)));
                }
            }
        }
    }
    let vals: Vec<Result<f64>> = nodes.par_iter().map(|&(t, _, _)| op.gamma(t)).collect();
    let mut acc = 0.0;
    for (&(t, w, off), g) in nodes.iter().zip(vals) {
        acc += w * g? * u.spherical_mean(p, lambda * t, off) * t.powf(nf - 1.0);
    }
    // far field on [FAR_FIELD, FAR_END] in log variable, then the constant tail
    let decades = (FAR_END / FAR_FIELD).log10().round() as usize;
    let mut far = Rule::default();
    for j in 0..decades * 4 {
        let a = FAR_FIELD.ln() + (j as f64) * 10f64.ln() / 4.0;
        far.push_panel(a, a + 10f64.ln() / 4.0, 16);
    }
    for (&z, &w) in far.nodes.iter().zip(&far.weights) {
        let t = z.exp();
        acc += w * op.far(t) * u.spherical_mean(p, lambda * t, None) * t.powf(nf);
    }
    let s2 = 2.0 * p.s;
    acc += u.far_value() * (op.k0 * FAR_END.powf(-s2) / s2 + op.k2 * FAR_END.powf(-s2 - 2.0) / (s2 + 2.0));
    Ok(op.omega * acc)
}

/// γ on a radial grid with mass, positivity and tail diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct GammaField {
    pub profile: SmoothProfile,
    pub radii: Vec<f64>,
    pub gamma_samples: Vec<f64>,
    pub total_mass: f64,
    pub positivity_min: f64,
    pub tail_constant: f64,
    /// (t, t^{n+2s}γ(t)) over the last decade before the far field.
    pub tail_fit: Vec<(f64, f64)>,
    pub tail_spread: f64,
    /// Largest principal-value error estimate among the samples.
    pub interior_err: f64,
}

pub fn gamma_field(op: &GammaOp, radii: &[f64]) -> Result<GammaField> {
    let vals: Vec<Result<(f64, f64)>> = radii
        .par_iter()
        .map(|&t| if t > 1.0 { Ok((op.exterior(t), 0.0)) } else { op.interior(t) })
        .collect();
    let mut gamma_samples = Vec::with_capacity(radii.len());
    let mut interior_err: f64 = 0.0;
    for v in vals {
        let (g, e) = v?;
        gamma_samples.push(g);
        interior_err = interior_err.max(e);
    }
    let positivity_min = gamma_samples.iter().copied().fold(f64::INFINITY, f64::min);
    let total_mass = pairing(op, &TestFunction::Constant { value: 1.0 }, 1.0)?;
    let k = op.k;
    let tail_fit: Vec<(f64, f64)> = (0..=10)
        .map(|j| {
            let t = FAR_FIELD / 10f64.powf(1.0 - j as f64 / 10.0);
            (t, t.powf(k) * op.exterior(t))
        })
        .collect();
    let hi = tail_fit.iter().map(|x| x.1).fold(f64::MIN, f64::max);
    let lo = tail_fit.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    Ok(GammaField {
        profile: op.profile.clone(),
        radii: radii.to_vec(),
        gamma_samples,
        total_mass,
        positivity_min,
        tail_constant: op.k0,
        tail_spread: (hi - lo) / op.k0.abs(),
        tail_fit,
        interior_err,
    })
}

/// Sup-gaps of c γ_λ λ^{-2s} against |x|^{-(n+2s)} on the shell 1 ≤ |x| ≤ 2.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub c: f64,
    pub lambdas: Vec<f64>,
    pub gaps: Vec<f64>,
    pub ratios: Vec<f64>,
    pub pass: bool,
}

pub const SCALING_RATE: f64 = 1.5;

pub fn gamma_scaling_limit(op: &GammaOp, shell_points: usize) -> ScalingReport {
    let c = 1.0 / op.tail_constant();
    let k = op.k;
    let n = op.profile.n as f64;
    let lambdas = vec![1.0, 0.5, 0.25, 0.125];
    let gaps: Vec<f64> = lambdas
        .iter()
        .map(|&lam| {
            (0..shell_points)
                .map(|i| {
                    let x = 1.0 + i as f64 / (shell_points - 1) as f64;
                    // γ_λ(x) = γ(x/λ)λ^{-n}
                    let g = op.exterior(x / lam) * lam.powf(-n);
                    (c * g * lam.powf(-2.0 * op.profile.s) - x.powf(-k)).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = c > 0.0 && gaps[0].is_finite() && gaps[0] > 0.0 && ratios.iter().all(|&r| r >= SCALING_RATE);
    ScalingReport { c, lambdas, gaps, ratios, pass }
}

/// One mean-value test: u(x₀) - ⟨u, γ_λ(x₀ - ·)⟩ for each λ.
#[derive(Debug, Clone, Serialize)]
pub struct MeanValueReport {
    pub function: TestFunction,
    pub value: f64,
    pub lambdas: Vec<f64>,
    pub pairings: Vec<f64>,
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    /// ⟨u, γ_λ⟩ nonincreasing in λ within tolerance.
    pub monotone: bool,
    pub holds: bool,
}

pub fn mean_value_check(op: &GammaOp, u: TestFunction, lambdas: &[f64]) -> Result<MeanValueReport> {
    if let TestFunction::Fundamental { distance } = u {
        if let Some(&l) = lambdas.iter().find(|&&l| l >= distance) {
            return Err(Error::Domain(format!("lambda = {l} must stay below the distance {distance} to the pole")));
        }
    }
    let mut ls = lambdas.to_vec();
    ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let value = u.at_center(&op.profile);
    let pairings = ls.iter().map(|&l| pairing(op, &u, l)).collect::<Result<Vec<f64>>>()?;
    let gaps: Vec<f64> = pairings.iter().map(|q| value - q).collect();
    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let monotone = pairings.windows(2).all(|w| w[1] <= w[0] + MEAN_VALUE_TOL);
    Ok(MeanValueReport {
        function: u,
        value,
        lambdas: ls,
        pairings,
        gaps,
        min_gap,
        monotone,
        holds: min_gap >= -MEAN_VALUE_TOL && monotone,
    })
}

/// Riesz potential of γ against Γ at a few radii: (|x|, Φ∗γ, Γ).
pub fn riesz_comparison(op: &GammaOp, radii: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    radii
        .iter()
        .map(|&d| Ok((d, pairing(op, &TestFunction::Fundamental { distance: d }, 1.0)?, op.profile.psi(d))))
        .collect()
}

/// Full certification of Γ and γ for one (n, s).
#[derive(Debug, Clone, Serialize)]
pub struct SupersolReport {
    pub n: u32,
    pub s: f64,
    pub kappa: KappaChoice,
    pub cap: (f64, f64),
    pub lemma: LemmaReport,
    pub ordering_min: f64,
    pub field: GammaField,
    pub scaling: ScalingReport,
    pub mean_value: Vec<MeanValueReport>,
    pub control_detected: bool,
    pub riesz: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

/// Default sample radii for γ: dense inside B₂, geometric beyond.
pub fn default_radii(count: usize) -> Vec<f64> {
    let inner = count * 3 / 4;
    let mut v: Vec<f64> = (1..=inner).map(|i| 2.0 * i as f64 / inner as f64).collect();
    let outer = count - inner;
    v.extend((1..=outer).map(|i| 2.0 * 50f64.powf(i as f64 / outer as f64)));
    v
}

pub fn certify(order: &Order, nodes: usize, radii: &[f64]) -> Result<SupersolReport> {
    let kappa = choose_kappa(order, nodes)?;
    let prof = build_psi(order, &kappa)?;
    let lemma = verify_lemma_properties(&prof, nodes)?;
    let ordering_min = gamma_ordering(&prof);
    let op = GammaOp::new(&prof)?;
    let field = gamma_field(&op, radii)?;
    let scaling = gamma_scaling_limit(&op, 33);
    let lambdas = [0.125, 0.25, 0.5];
    let corpus = [
        TestFunction::Constant { value: 1.0 },
        TestFunction::Fundamental { distance: 1.0 },
        TestFunction::Generator,
    ];
    let mut mean_value = Vec::new();
    for u in corpus {
        mean_value.push(mean_value_check(&op, u, &lambdas)?);
    }
    let control = mean_value_check(&op, TestFunction::NegativeBump { width: 0.5 }, &lambdas)?;
    let control_detected = !control.holds;
    mean_value.push(control);
    let riesz = riesz_comparison(&op, &[1.5, 2.0, 3.0])?;
    let pass = ordering_min >= -ROUNDING_TOL
        && field.positivity_min > 0.0
        && (field.total_mass - 1.0).abs() <= MASS_TOL
        && scaling.pass
        && mean_value[..3].iter().all(|m| m.holds)
        && control_detected
        && riesz.iter().all(|&(_, pot, g)| pot >= g - MEAN_VALUE_TOL);
    Ok(SupersolReport {
        n: order.n,
        s: order.s,
        cap: prof.cap,
        kappa,
        lemma,
        ordering_min,
        field,
        scaling,
        mean_value,
        control_detected,
        riesz,
        pass,
    })
}
