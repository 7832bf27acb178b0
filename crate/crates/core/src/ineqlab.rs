//! Falsification suites for the Hardy-type inequalities.
//!
//! Radial profiles live on the cylinder: `U(r) = r^{-a}u(τ)` with
//! `a = (n-2s)/2`, `(-Δ)^sU = r^{-b}Λ₀(D)u` with `b = (n+2s)/2`, and
//! `U' = r^{-a-1}d` with `d = u' - au`. Then
//! `R(τ) = r^{2s}ρ_U = ((D - b)Λ₀u)/d = (M(D)d)/d`, `M(ξ) = Λ₀(ξ)(b - iξ)/(a - iξ)`.
//! Applying `M` to `d` avoids the cancellation between `(Λ₀u)'` and `bΛ₀u`
//! in the tails. (`M(ξ) = Λ₁(ξ + i)`: the same weight comes from `(-Δ)^s`
//! commuting with `∂_i`.)

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cylcore::{dot, ChannelOp, CylGrid, CylProfile, Spectral};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::solver::MinimizerResult;
use crate::specfun::{channel_symbol, ln_gamma, riesz_constant, sphere_area, Order};
use crate::spectral::deficit;

/// Nodes where `|r^{a+1}U'|` is below this fraction of its maximum are masked.
/// Spectral differentiation leaves ~1e-13 relative noise in `d`, so this is
/// where `R` is resolved pointwise to about 1e-6 of its maximum.
pub const MASK_THRESHOLD: f64 = 1e-7;
/// Looser mask for integrals against `u²`, where tail noise is damped.
pub const INTEGRAL_MASK_THRESHOLD: f64 = 1e-10;
/// Accepted deficit floor for normalized trials.
pub const TRIAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RhoProfile {
    pub base: CylProfile,
    /// `R(τ_i) = e^{2sτ_i} ρ_U(e^{τ_i})`, zero on masked nodes.
    pub r: Vec<f64>,
    pub mask: Vec<bool>,
    /// `r^{a+1}U' = u' - au`.
    pub d: Vec<f64>,
    /// Resolvable nodes where `U' ≥ 0`.
    pub nonmonotone: usize,
}

impl RhoProfile {
    pub fn valid(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Smallest and largest valid τ.
    pub fn window(&self) -> (f64, f64) {
        let g = &self.base.grid;
        let first = self.mask.iter().position(|m| *m).unwrap_or(0);
        let last = self.mask.iter().rposition(|m| *m).unwrap_or(0);
        (g.tau(first), g.tau(last))
    }
}

pub fn rho_profile(u: &CylProfile) -> Result<RhoProfile> {
    rho_profile_masked(u, MASK_THRESHOLD)
}

pub fn rho_profile_masked(u: &CylProfile, threshold: f64) -> Result<RhoProfile> {
    let order = u.order;
    let a = order.half_gap();
    let radial: Vec<f64> = u.grid.nodes().iter().zip(&u.values).map(|(t, v)| (-a * t).exp() * v).collect();
    let (lo, hi) = radial.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()) {
        return Err(Error::Domain("U is constant, so U' vanishes identically".into()));
    }
    u.check_boundary()?;
    let (b, sp) = (order.nf() / 2.0 + order.s, Spectral::new(u.grid));
    let du = sp.derivative(&u.values);
    let d: Vec<f64> = du.iter().zip(&u.values).map(|(d, v)| d - a * v).collect();
    let sym = channel_symbol(&order, 0)?;
    let m: Vec<Complex64> = (0..u.grid.n)
        .map(|j| {
            let xi = u.grid.xi(j);
            sym.eval(xi) * Complex64::new(b, -xi) / Complex64::new(a, -xi)
        })
        .collect();
    let num = sp.multiply_complex(&d, &m);
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut mask = vec![false; u.grid.n];
    let mut r = vec![0.0; u.grid.n];
    let mut nonmonotone = 0;
    for i in 0..u.grid.n {
        if d[i].abs() < threshold * scale {
            continue;
        }
        if d[i] >= 0.0 {
            nonmonotone += 1;
            continue;
        }
        mask[i] = true;
        r[i] = num[i] / d[i];
    }
    if !mask.iter().any(|m| *m) {
        return Err(Error::Domain("no node with resolvable U' < 0".into()));
    }
    Ok(RhoProfile { base: u.clone(), r, mask, d, nonmonotone })
}

/// `A_b` in `(-Δ)^s U = A_b U^{(n+2s)/(n-2s)}` for `U = (1+r²)^{-(n-2s)/2}`.
pub fn bubble_constant(order: &Order) -> f64 {
    let (n, s) = (order.nf(), order.s);
    (2.0 * s * 2f64.ln() + ln_gamma((n + 2.0 * s) / 2.0) - ln_gamma((n - 2.0 * s) / 2.0)).exp()
}

/// Critical exponent `(n+2s)/(n-2s)` of the bubble equation.
pub fn bubble_power(order: &Order) -> f64 {
    (order.nf() + 2.0 * order.s) / (order.nf() - 2.0 * order.s)
}

/// On the cylinder the bubble is `(2 cosh τ)^{-a}`.
pub fn bubble_profile(order: &Order, grid: CylGrid) -> Result<CylProfile> {
    let a = order.half_gap();
    let values = grid.nodes().iter().map(|t| (-a * (2.0 * t.cosh()).ln()).exp()).collect();
    CylProfile::new(grid, values, *order, None)
}

/// Window wide enough for the bubble tail `e^{-a|τ|}` to fall below 1e-16.
pub fn bubble_grid(order: &Order) -> Result<CylGrid> {
    let l = (37.0 / order.half_gap()).max(40.0);
    let n = ((2.0 * l / 0.05).ceil() as usize).next_power_of_two();
    CylGrid::new(l, n)
}

/// Closed form `R = r^{2s} p A_b U^{p-1}` for the bubble.
pub fn bubble_rho_exact(order: &Order, tau: f64) -> f64 {
    let p = bubble_power(order);
    let u = (1.0 + (2.0 * tau).exp()).powf(-order.half_gap());
    (2.0 * order.s * tau).exp() * p * bubble_constant(order) * u.powf(p - 1.0)
}

/// `⟨Λ_ℓ g, g⟩ - h Σ R g²`, divided by `h Σ g²`.
pub fn hardy_trial(rho: &RhoProfile, ell: u32, g: &[f64]) -> Result<f64> {
    if ell == 0 {
        return Err(Error::Domain("the Hardy-type inequality needs ell >= 1".into()));
    }
    let grid = rho.base.grid;
    let op = ChannelOp::new(grid, &rho.base.order, ell)?;
    let form = dot(&grid, &op.apply(g, 0.0), g);
    let weighted: f64 = grid.h() * g.iter().zip(&rho.r).map(|(x, r)| r * x * x).sum::<f64>();
    let norm = dot(&grid, g, g);
    Ok((form - weighted) / norm)
}

/// Per-trial RNG: master seed xor a stable hash of the trial index.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Sum of 1 to 4 Gaussians with centers in `[lo, hi]`.
pub fn random_bumps(rng: &mut ChaCha8Rng, grid: &CylGrid, lo: f64, hi: f64) -> Vec<f64> {
    let k = rng.random_range(1..=4);
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (rng.random_range(lo..=hi), rng.random_range(0.3..2.5), rng.random_range(-1.0..1.0)))
        .collect();
    grid.nodes()
        .iter()
        .map(|t| bumps.iter().map(|(c, w, a)| a * (-0.5 * ((t - c) / w).powi(2)).exp()).sum())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trials: usize,
    pub skipped: usize,
    pub min_deficit: f64,
    pub failures: usize,
    pub seed: u64,
}

impl TrialReport {
    fn collect(seed: u64, results: Vec<Option<f64>>) -> Self {
        let done: Vec<f64> = results.iter().flatten().copied().collect();
        Self {
            trials: done.len(),
            skipped: results.len() - done.len(),
            min_deficit: done.iter().copied().fold(f64::INFINITY, f64::min),
            failures: done.iter().filter(|d| **d < -TRIAL_TOL).count(),
            seed,
        }
    }
}

/// `count` seeded trials on channel ℓ; trials with mass on masked nodes are skipped.
pub fn hardy_trials(rho: &RhoProfile, ell: u32, seed: u64, count: usize) -> Result<TrialReport> {
    let grid = rho.base.grid;
    let (lo, hi) = rho.window();
    let (lo, hi) = (lo + 8.0, hi - 8.0);
    if lo >= hi {
        return Err(Error::Domain("valid window too short for trials".into()));
    }
    let results: Vec<Result<Option<f64>>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let g = random_bumps(&mut trial_rng(seed, i), &grid, lo, hi);
            let total: f64 = g.iter().map(|x| x * x).sum();
            let outside: f64 = g.iter().zip(&rho.mask).filter(|(_, m)| !**m).map(|(x, _)| x * x).sum();
            if outside > 1e-12 * total {
                return Ok(None);
            }
            hardy_trial(rho, ell, &g).map(Some)
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(TrialReport::collect(seed, results))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthoReport {
    pub ratio: f64,
    pub expected: f64,
    pub weighted: f64,
    pub seminorm: f64,
}

/// `∫ U²ρ_U / ‖U‖²_{Ḣs}` for the bubble; the exact value is `(n+2s)/(n-2s)`.
pub fn orthogonality_necessity(order: &Order) -> Result<OrthoReport> {
    if 2.0 * order.s >= order.nf() {
        return Err(Error::Domain("needs n > 2s".into()));
    }
    let grid = bubble_grid(order)?;
    let u = bubble_profile(order, grid)?;
    let rho = rho_profile_masked(&u, INTEGRAL_MASK_THRESHOLD)?;
    let op = ChannelOp::new(grid, order, 0)?;
    let seminorm = dot(&grid, &op.apply(&u.values, 0.0), &u.values);
    let weighted = grid.h() * u.values.iter().zip(&rho.r).map(|(x, r)| r * x * x).sum::<f64>();
    Ok(OrthoReport { ratio: weighted / seminorm, expected: bubble_power(order), weighted, seminorm })
}

/// `exp(1 - 1/(1 - z²))` on `|z| < 1`, `z = (x - c)/w`: smooth, compactly supported, peak 1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amp: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.width;
        if z.abs() >= 1.0 {
            0.0
        } else {
            self.amp * (1.0 - 1.0 / (1.0 - z * z)).exp()
        }
    }
}

/// A test function on the line: a sum of bumps plus a polynomial.
#[derive(Debug, Clone, Serialize)]
pub struct LineFn {
    pub bumps: Vec<Bump>,
    pub poly: Vec<f64>,
}

impl LineFn {
    pub fn eval(&self, x: f64) -> f64 {
        let p = self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
        p + self.bumps.iter().map(|b| b.eval(x)).sum::<f64>()
    }

    /// Smallest interval holding every bump (polynomial part excluded).
    pub fn support(&self) -> (f64, f64) {
        self.bumps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), k| {
            (a.min(k.center - k.width), b.max(k.center + k.width))
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IbpCase {
    pub s: f64,
    pub f: LineFn,
    pub g: LineFn,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IbpResult {
    pub left: f64,
    pub right: f64,
    /// `|left - right| / ‖fg‖²_{Ḣs}`.
    pub gap: f64,
}

const IBP_PANELS: usize = 96;
const IBP_ORDER: usize = 24;

const IBP_HALVINGS: i32 = 16;

// Composite Gauss rule on [a, b]: dyadic panels toward a down to d·2^{-16},
// uniform panels above a + d. The caller adds the piece below.
fn graded_from_zero(a: f64, b: f64, d: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(IBP_ORDER);
    let mut out = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in gl.x.iter().zip(&gl.w) {
            out.push((m + r * x, r * w));
        }
    };
    let d = d.min(b - a);
    let mut hi = a + d;
    for _ in 0..IBP_HALVINGS {
        push(a + 0.5 * (hi - a), hi);
        hi = a + 0.5 * (hi - a);
    }
    let m = ((b - a - d) / d).ceil().max(0.0) as usize;
    for k in 0..m {
        let lo = a + d + (b - a - d) * k as f64 / m as f64;
        let hi = a + d + (b - a - d) * (k + 1) as f64 / m as f64;
        push(lo, hi);
    }
    out
}

fn uniform(a: f64, b: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(IBP_ORDER);
    let mut out = Vec::with_capacity(IBP_PANELS * IBP_ORDER);
    let h = (b - a) / IBP_PANELS as f64;
    for k in 0..IBP_PANELS {
        let (m, r) = (a + h * (k as f64 + 0.5), 0.5 * h);
        for (x, w) in gl.x.iter().zip(&gl.w) {
            out.push((m + r * x, r * w));
        }
    }
    out
}

/// `(-Δ)^s h(x) = C_{1,s} ∫_0^∞ (2h(x) - h(x+z) - h(x-z)) z^{-1-2s} dz` for `h`
/// supported in `[a, b]`.
fn line_frac_lap<H: Fn(f64) -> f64>(h: &H, x: f64, s: f64, (a, b): (f64, f64), d: f64, c: f64) -> f64 {
    let z_max = (b - x).max(x - a).max(d);
    let hx = h(x);
    let second = |z: f64| 2.0 * hx - h(x + z) - h(x - z);
    let near: f64 = graded_from_zero(0.0, z_max, d).iter().map(|(z, w)| w * second(*z) * z.powf(-1.0 - 2.0 * s)).sum();
    c * (near + below_cut(&second, d.min(z_max), s) + 2.0 * hx * z_max.powf(-2.0 * s) / (2.0 * s))
}

// ∫_0^ε q(z) z^{-1-2s} dz for q(z) ≈ q(ε)(z/ε)², ε the innermost graded node
fn below_cut<Q: Fn(f64) -> f64>(q: &Q, d: f64, s: f64) -> f64 {
    let eps = d * 0.5f64.powi(IBP_HALVINGS);
    q(eps) * eps.powf(-2.0 * s) / (2.0 - 2.0 * s)
}

/// Both sides of the fractional product rule at n = 1:
/// `‖fg‖² - ∫ f²g(-Δ)^s g` against `(C_{1,s}/2)∬ g(x)g(y)(f(x)-f(y))²/|x-y|^{1+2s}`.
pub fn frac_ibp_check(case: &IbpCase) -> Result<IbpResult> {
    let s = case.s;
    if !(s > 0.0 && s <= 0.5) {
        return Err(Error::Domain(format!("frac_ibp_check needs 0 < s <= 1/2, got {s}")));
    }
    let c = riesz_constant(1, s)?;
    let (a, b) = case.g.support();
    let d = case.g.bumps.iter().map(|k| k.width).fold(f64::INFINITY, f64::min) / 8.0;
    let f = |x: f64| case.f.eval(x);
    let g = |x: f64| case.g.eval(x);
    let fg = |x: f64| f(x) * g(x);
    let outer = uniform(a, b);
    let mut hs = 0.0;
    let mut cross = 0.0;
    let mut right = 0.0;
    for (x, w) in &outer {
        let gx = g(*x);
        if gx == 0.0 {
            continue;
        }
        let fx = f(*x);
        hs += w * fg(*x) * line_frac_lap(&fg, *x, s, (a, b), d, c);
        cross += w * fx * fx * gx * line_frac_lap(&g, *x, s, (a, b), d, c);
        // y = x + z over z > 0; the y < x half is the same by symmetry
        if *x < b {
            let q = |z: f64| {
                let df = fx - f(x + z);
                g(x + z) * df * df
            };
            let inner: f64 = graded_from_zero(0.0, b - x, d).iter().map(|(z, wz)| wz * q(*z) * z.powf(-1.0 - 2.0 * s)).sum();
            right += w * gx * (inner + below_cut(&q, d.min(b - x), s));
        }
    }
    let right = c * right;
    let left = hs - cross;
    let gap = (left - right).abs() / hs.abs().max(f64::MIN_POSITIVE);
    if !gap.is_finite() {
        return Err(Error::Quadrature { what: "fractional product rule".into(), estimate: f64::NAN });
    }
    Ok(IbpResult { left, right, gap })
}

/// Fixed 20-case corpus: constant f, positive and sign-changing g, several s.
pub fn ibp_corpus() -> Vec<IbpCase> {
    let bump = |c: f64, w: f64, amp: f64| Bump { center: c, width: w, amp };
    let lf = |bumps: Vec<Bump>, poly: Vec<f64>| LineFn { bumps, poly };
    let mut out = Vec::new();
    let ss = [0.1, 0.25, 0.4, 0.5];
    for (k, &s) in ss.iter().enumerate() {
        let kf = k as f64;
        // constant f
        out.push(IbpCase { s, f: lf(vec![], vec![1.5]), g: lf(vec![bump(0.0, 1.0, 1.0)], vec![]) });
        // positive bumps
        out.push(IbpCase { s, f: lf(vec![bump(0.2, 0.8, 1.0)], vec![]), g: lf(vec![bump(0.0, 1.0, 1.0)], vec![]) });
        // linear plus bump f against a two-bump g
        out.push(IbpCase {
            s,
            f: lf(vec![bump(-0.3, 0.5, 0.7)], vec![0.1, 0.5 + 0.1 * kf]),
            g: lf(vec![bump(-0.5, 0.7, 1.0), bump(0.6, 0.6, 0.6)], vec![]),
        });
        // sign-changing g
        out.push(IbpCase {
            s,
            f: lf(vec![bump(0.1, 1.2, 1.0)], vec![0.0, 0.0, 0.3]),
            g: lf(vec![bump(-0.45, 0.5, 1.0), bump(0.45, 0.5, -1.0)], vec![]),
        });
        // wide g, oscillating polynomial f
        out.push(IbpCase {
            s,
            f: lf(vec![], vec![0.2, -1.0, 0.0, 0.4]),
            g: lf(vec![bump(0.3, 1.5, 0.8)], vec![]),
        });
    }
    out
}

/// Level-set weak norm `sup_c c |{|u| > c}|^{1/r}` of a step function
/// with values `u_i` on cells of measure `m_i`.
pub fn weak_norm(u: &[f64], measure: &[f64], r: f64) -> f64 {
    let mut idx: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0).collect();
    idx.sort_by(|&i, &j| u[j].abs().partial_cmp(&u[i].abs()).unwrap());
    let mut best = 0.0f64;
    let mut acc = 0.0;
    let mut k = 0;
    while k < idx.len() {
        // c just below |u_k|: every cell with |u| ≥ |u_k| counts
        let level = u[idx[k]].abs();
        while k < idx.len() && u[idx[k]].abs() == level {
            acc += measure[idx[k]];
            k += 1;
        }
        best = best.max(level * acc.powf(1.0 / r));
    }
    best
}

/// Averaged form `sup_A |A|^{1/r-1} ∫_A |u|`, exact for step functions:
/// the optimal `A` is a superlevel set, possibly splitting one cell.
pub fn weak_norm_averaged(u: &[f64], measure: &[f64], r: f64) -> f64 {
    let mut idx: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0 && measure[i] > 0.0).collect();
    idx.sort_by(|&i, &j| u[j].abs().partial_cmp(&u[i].abs()).unwrap());
    let beta = 1.0 / r - 1.0;
    let mut best = 0.0f64;
    let (mut a0, mut f0) = (0.0, 0.0);
    for &i in &idx {
        let (v, m) = (u[i].abs(), measure[i]);
        let a1 = a0 + m;
        // interior critical point of a^β (f0 + v(a - a0))
        let star = (r - 1.0) * (f0 - v * a0) / v;
        if star > a0 && star < a1 {
            best = best.max(star.powf(beta) * (f0 + v * (star - a0)));
        }
        f0 += v * m;
        a0 = a1;
        best = best.max(a0.powf(beta) * f0);
    }
    best
}

/// Shell measures `ω r_i^n h` of the cylinder cells.
pub fn cell_measures(grid: &CylGrid, order: &Order) -> Vec<f64> {
    let om = sphere_area(order.n);
    grid.nodes().iter().map(|t| om * (order.nf() * t).exp() * grid.h()).collect()
}

/// Radial samples `w(r_i) = r_i^{-a} v_i`.
pub fn radial_values(p: &CylProfile) -> Vec<f64> {
    let a = p.order.half_gap();
    p.grid.nodes().iter().zip(&p.values).map(|(t, v)| (-a * t).exp() * v).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderSample {
    pub radius: f64,
    pub deficit: f64,
    pub weak: f64,
    pub ratio: f64,
}

/// `deficit(w) / (|Ω|^{-(n-2s-2α)/n} ‖w‖²_{L^{q,∞}})`, `q = n/(n-2s-α)`,
/// for `w` supported in the ball of the given radius.
pub fn remainder_ratio(gs: &MinimizerResult, w: &CylProfile, radius: f64) -> Result<RemainderSample> {
    let (order, pr) = (gs.profile.order, gs.params);
    if pr.alpha < 0.0 {
        return Err(Error::Domain("the remainder inequality needs alpha >= 0".into()));
    }
    if w.grid != gs.profile.grid {
        return Err(Error::Domain("profile and ground state must share a grid".into()));
    }
    let (n, s) = (order.nf(), order.s);
    let op = ChannelOp::new(w.grid, &order, 0)?;
    let def = deficit(&op, gs.coeff, &w.values, &pr, gs.quotient);
    let q = n / (n - 2.0 * s - pr.alpha);
    let weak = weak_norm(&radial_values(w), &cell_measures(&w.grid, &order), q);
    let vol = sphere_area(order.n) * radius.powf(n) / n;
    let ratio = def / (vol.powf(-(n - 2.0 * s - 2.0 * pr.alpha) / n) * weak * weak);
    Ok(RemainderSample { radius, deficit: def, weak, ratio })
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderReport {
    pub samples: Vec<RemainderSample>,
    pub infimum: f64,
    pub pass: bool,
}

pub fn remainder_check(gs: &MinimizerResult, family: &[(CylProfile, f64)]) -> Result<RemainderReport> {
    let samples = family.iter().map(|(w, r)| remainder_ratio(gs, w, *r)).collect::<Result<Vec<_>>>()?;
    let infimum = samples.iter().map(|x| x.ratio).fold(f64::INFINITY, f64::min);
    Ok(RemainderReport { pass: infimum > 0.0, infimum, samples })
}

/// Radial profile `f(V(r)/M)` in the volume variable `V = |B_r|`, `M = |B_radius|`,
/// with `f(x) = (1 - x²)³`; the second entry `f(|2V/M - 1|)` is equimeasurable
/// but not decreasing.
pub fn rearranged_pair(order: &Order, grid: CylGrid, radius: f64) -> Result<(CylProfile, CylProfile)> {
    let n = order.nf();
    let vol = |r: f64| (r / radius).powf(n);
    let f = |x: f64| if x >= 1.0 { 0.0 } else { (1.0 - x * x).powi(3) };
    let a = order.half_gap();
    let make = |phi: &dyn Fn(f64) -> f64| {
        let values = grid.nodes().iter().map(|t| (a * t).exp() * phi(t.exp())).collect();
        CylProfile::new(grid, values, *order, None)
    };
    Ok((make(&|r| f(vol(r)))?, make(&|r| f((2.0 * vol(r) - 1.0).abs()))?))
}

/// `χ(r) W_λ(r)` with `W_λ = λ^a W(λ·)` and a smooth cutoff equal to 1 on
/// `r ≤ radius/2` and 0 on `r ≥ radius`; `λ = e^{k h}` for an integer node shift.
pub fn cutoff_dilate(gs: &MinimizerResult, k: usize, radius: f64) -> CylProfile {
    let g = gs.profile.grid;
    let n = g.n;
    let cut = |r: f64| {
        let x = (2.0 * r / radius - 1.0).clamp(0.0, 1.0);
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            0.0
        } else {
            let e = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
            e(1.0 - x) / (e(1.0 - x) + e(x))
        }
    };
    // v_λ(τ) = v(τ + ln λ): node i takes v at i + k
    let values = (0..n)
        .map(|i| {
            let src = i + k;
            let v = if src < n { gs.profile.values[src] } else { 0.0 };
            v * cut(g.tau(i).exp())
        })
        .collect();
    gs.profile.with_values(values)
}

/// Node shift by `k`: the exact discrete dilation `w ↦ w_λ`, `λ = e^{kh}`.
pub fn shift_nodes(p: &CylProfile, k: usize) -> CylProfile {
    let n = p.grid.n;
    p.with_values((0..n).map(|i| if i + k < n { p.values[i + k] } else { 0.0 }).collect())
}

/// Normalized second-variation deficits
/// `(‖g‖*² - (p-1)∫ g² W^{p-2}|x|^{-tp}) / ‖g‖*²` for radial `g` projected
/// off `W^{p-1}|x|^{-tp}`.
pub fn hessian_trials(gs: &MinimizerResult, seed: u64, count: usize) -> Result<TrialReport> {
    let grid = gs.profile.grid;
    let pr = gs.params;
    let op = ChannelOp::new(grid, &gs.profile.order, 0)?;
    let v = &gs.profile.values;
    let vmax = gs.profile.max_abs();
    let first = v.iter().position(|x| *x > 1e-6 * vmax).unwrap_or(0);
    let last = v.iter().rposition(|x| *x > 1e-6 * vmax).unwrap_or(grid.n - 1);
    let (lo, hi) = (grid.tau(first), grid.tau(last));
    let d: Vec<f64> = v.iter().map(|x| x.max(0.0).powf(pr.p - 2.0)).collect();
    let dv: Vec<f64> = v.iter().zip(&d).map(|(a, b)| a * b).collect();
    let vv = dot(&grid, &dv, v);
    let results: Vec<Option<f64>> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = random_bumps(&mut trial_rng(seed, i), &grid, lo, hi);
            let c = dot(&grid, &g, &dv) / vv;
            g.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            let star = dot(&grid, &op.apply(&g, gs.coeff), &g);
            let wgt = grid.h() * g.iter().zip(&d).map(|(x, w)| w * x * x).sum::<f64>();
            Some((star - (pr.p - 1.0) * wgt) / star)
        })
        .collect();
    Ok(TrialReport::collect(seed, results))
}
