//! Sphere-averaged singular kernels and the radial principal-value integral.
//!
//! For `f(|x|)Y_ℓ(x/|x|)` with `Y_ℓ` a spherical harmonic, the Funk–Hecke
//! formula reduces `(-Δ)^s` to a one-dimensional integral in `t = |y|/|x|`:
//!
//! ```text
//! (-Δ)^s(fY)(r e)/Y(e) = C_{n,s} r^{-2s} PV∫_0^∞ [f(r)k_0(t) - f(rt)k_ℓ(t)] t^{n-1} dt,
//! k_ℓ(t) = ∫_{S^{n-1}} |e - tθ|^{-(n+2s)} P_ℓ(e·θ) dσ(θ).
//! ```
//!
//! Folding `(1,∞)` onto `(0,1)` with `k_ℓ(1/t) = t^{n+2s}k_ℓ(t)` makes the
//! principal value disappear: the bracket
//! `(f(r)-f(rt))t^{n-1} + (f(r)-f(r/t))t^{2s-1}` vanishes to second order
//! at `t = 1`. The last stretch `1-t < h_cut` is closed with the leading
//! `h^{1-2s}` power law, since rounding in the bracket grows like `h^{-1-2s}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, Estimate};
use crate::specfun::{riesz_constant, sphere_area, Order};

/// `1 - P_ℓ(x)` for the Funk–Hecke polynomial of dimension n (P_ℓ(1) = 1),
/// evaluated from `d = 1 - x` without cancellation.
pub fn one_minus_legendre(n: u32, ell: u32, x: f64, d: f64) -> f64 {
    if ell == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let (mut q0, mut q1) = (0.0, d);
    for k in 1..ell {
        let kf = k as f64;
        let q2 = ((2.0 * kf + nf - 2.0) * (d + x * q1) - kf * q0) / (kf + nf - 2.0);
        q0 = q1;
        q1 = q2;
    }
    q1
}

const SERIES_TERMS: usize = 48;
/// Below this t the kernel is summed from its Taylor series; it is also a
/// panel break of the radial rules.
pub const SERIES_RADIUS: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct SphereKernel {
    pub n: u32,
    pub s: f64,
    pub ell: u32,
    // Taylor coefficients in t of k_ℓ and k_0 - k_ℓ; near t = 0 the direct
    // angular integral of k_ℓ ~ t^ℓ loses everything to cancellation
    series: Vec<f64>,
    series_diff: Vec<f64>,
}

fn gegenbauer_all(mu: f64, x: f64, kmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; kmax + 1];
    c[0] = 1.0;
    if kmax >= 1 {
        c[1] = 2.0 * mu * x;
    }
    for k in 1..kmax {
        let kf = k as f64;
        c[k + 1] = (2.0 * x * (kf + mu) * c[k] - (kf + 2.0 * mu - 1.0) * c[k - 1]) / (kf + 1.0);
    }
    c
}

impl SphereKernel {
    pub fn new(order: &Order, ell: u32) -> Result<Self> {
        if order.n == 1 && ell > 1 {
            return Err(Error::Domain(format!("n = 1 has no channel ell = {ell}")));
        }
        // (1 - 2xt + t²)^{-μ} = Σ C_k^μ(x) t^k, integrated against P_ℓ over the sphere
        let mu = (order.nf() + 2.0 * order.s) / 2.0;
        let mut c_ell = vec![0.0; SERIES_TERMS + 1];
        let mut c_zero = vec![0.0; SERIES_TERMS + 1];
        if order.n == 1 {
            let plus = gegenbauer_all(mu, 1.0, SERIES_TERMS);
            let minus = gegenbauer_all(mu, -1.0, SERIES_TERMS);
            let sign = if ell == 0 { 1.0 } else { -1.0 };
            for k in 0..=SERIES_TERMS {
                c_zero[k] = plus[k] + minus[k];
                c_ell[k] = plus[k] + sign * minus[k];
            }
        } else {
            let gl = gauss_legendre(64);
            let om = sphere_area(order.n - 1);
            for panel in 0..4 {
                let (a, b) = (PI * panel as f64 / 4.0, PI * (panel + 1) as f64 / 4.0);
                let (c, hw) = ((a + b) / 2.0, (b - a) / 2.0);
                for (x, w) in gl.x.iter().zip(&gl.w) {
                    let th = c + hw * x;
                    let ct = th.cos();
                    let wt = om * hw * w * th.sin().powi(order.n as i32 - 2);
                    let pl = 1.0 - one_minus_legendre(order.n, ell, ct, 1.0 - ct);
                    let g = gegenbauer_all(mu, ct, SERIES_TERMS);
                    for k in 0..=SERIES_TERMS {
                        c_zero[k] += wt * g[k];
                        c_ell[k] += wt * g[k] * pl;
                    }
                }
            }
            // exact zeros from orthogonality and parity
            for k in 0..=SERIES_TERMS {
                if k % 2 == 1 {
                    c_zero[k] = 0.0;
                }
                if k < ell as usize || (k + ell as usize) % 2 == 1 {
                    c_ell[k] = 0.0;
                }
            }
        }
        let series_diff = c_zero.iter().zip(&c_ell).map(|(a, b)| a - b).collect();
        Ok(Self { n: order.n, s: order.s, ell, series: c_ell, series_diff })
    }

    /// `(k_ℓ(t), k_0(t) - k_ℓ(t))` for `0 ≤ t < 1`, with `h = 1 - t` passed
    /// separately so points near the diagonal keep full relative accuracy.
    pub fn eval(&self, t: f64, h: f64) -> (f64, f64) {
        if t <= SERIES_RADIUS && self.ell > 0 {
            let horner = |c: &[f64]| c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck);
            return (horner(&self.series), horner(&self.series_diff));
        }
        let e = 1.0 + 2.0 * self.s;
        if self.n == 1 {
            let near = h.powf(-e);
            let far = (1.0 + t).powf(-e);
            return if self.ell == 0 { (near + far, 0.0) } else { (near - far, 2.0 * far) };
        }
        if self.n == 3 && self.ell == 0 {
            // 2π ∫_{-1}^{1} (1 - 2tx + t²)^{-k/2} dx in closed form
            let lh = if t < 0.5 { (-t).ln_1p() } else { h.ln() };
            let gap = (1.0 + t).powf(-e) * (-e * (lh - t.ln_1p())).exp_m1();
            return (2.0 * PI * gap / (e * t), 0.0);
        }
        let expo = -(self.n as f64 + 2.0 * self.s) / 2.0;
        let wpow = self.n as i32 - 2;
        let levels = ((PI / (0.01 * h.max(1e-300))).log2().ceil() as i32).clamp(4, 70);
        let gl = gauss_legendre(20);
        let (mut i0, mut iq) = (0.0, 0.0);
        let mut panel = |a: f64, b: f64| {
            let (c, hw) = ((a + b) / 2.0, (b - a) / 2.0);
            for (x, w) in gl.x.iter().zip(&gl.w) {
                let th = c + hw * x;
                let sh = (th / 2.0).sin();
                let d = 2.0 * sh * sh;
                let dist = h * h + 4.0 * t * sh * sh;
                let base = dist.powf(expo) * th.sin().powi(wpow) * hw * w;
                i0 += base;
                if self.ell > 0 {
                    iq += base * one_minus_legendre(self.n, self.ell, th.cos(), d);
                }
            }
        };
        let mut hi = PI;
        for _ in 0..levels {
            panel(hi / 2.0, hi);
            hi /= 2.0;
        }
        panel(0.0, hi);
        let om = sphere_area(self.n - 1);
        (om * (i0 - iq), om * iq)
    }
}

struct PvRule {
    series: Vec<f64>,
    t: Vec<f64>,
    h: Vec<f64>,
    wk: Vec<f64>,
    h_cut: f64,
    k_cut: f64,
    j_diff: f64,
}

fn dyadic_panels(lo_levels: usize, order: usize, sub: usize, top: f64, floor: f64) -> (Vec<f64>, Vec<f64>) {
    // nodes/weights on (floor, top] with dyadic breaks toward floor; when
    // floor == 0 an innermost panel closes the interval
    let gl = gauss_legendre(order);
    let (mut xs, mut ws) = (Vec::new(), Vec::new());
    let mut push = |a: f64, b: f64| {
        let hstep = (b - a) / sub as f64;
        for j in 0..sub {
            let (pa, pb) = (a + hstep * j as f64, a + hstep * (j + 1) as f64);
            let (c, hw) = ((pa + pb) / 2.0, (pb - pa) / 2.0);
            for (x, w) in gl.x.iter().zip(&gl.w) {
                xs.push(c + hw * x);
                ws.push(hw * w);
            }
        }
    };
    let mut hi = top;
    for _ in 0..lo_levels {
        let lo = hi / 2.0;
        if lo <= floor {
            break;
        }
        push(lo, hi);
        hi = lo;
    }
    push(floor, hi);
    (xs, ws)
}

impl PvRule {
    fn build(kern: &SphereKernel, order: usize, sub: usize, levels: usize, h_cut: f64) -> Self {
        let (n, s) = (kern.n as f64, kern.s);
        let (mut t, mut h, mut wk) = (Vec::new(), Vec::new(), Vec::new());
        // t in (0, 1/2]
        let (xa, wa) = dyadic_panels(levels, order, sub, 0.5, 0.0);
        for (x, w) in xa.into_iter().zip(wa) {
            let (k, _) = kern.eval(x, 1.0 - x);
            t.push(x);
            h.push(1.0 - x);
            wk.push(w * k);
        }
        // h = 1 - t in [h_cut, 1/2)
        let (xb, wb) = dyadic_panels(64, order, sub, 0.5, h_cut);
        for (y, w) in xb.into_iter().zip(wb) {
            let (k, _) = kern.eval(1.0 - y, y);
            t.push(1.0 - y);
            h.push(y);
            wk.push(w * k);
        }
        let (k_cut, _) = kern.eval(1.0 - h_cut, h_cut);
        let j_diff = if kern.ell == 0 {
            0.0
        } else {
            let g = |t: f64, h: f64| kern.eval(t, h).1 * (t.powf(n - 1.0) + t.powf(2.0 * s - 1.0));
            let (xa, wa) = dyadic_panels(levels, order, sub, 0.5, 0.0);
            let (xb, wb) = dyadic_panels(60, order, sub, 0.5, 0.0);
            xa.iter().zip(&wa).map(|(&x, &w)| w * g(x, 1.0 - x)).sum::<f64>()
                + xb.iter().zip(&wb).map(|(&y, &w)| w * g(1.0 - y, y)).sum::<f64>()
        };
        Self { series: kern.series.clone(), t, h, wk, h_cut, k_cut, j_diff }
    }

    fn integrate_below<B: Fn(f64, f64) -> f64>(&self, bracket: &B) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.t.len() {
            if self.t[i] < SERIES_RADIUS {
                acc += self.wk[i] * bracket(self.t[i], self.h[i]);
            }
        }
        acc
    }

    fn integrate_above<B: Fn(f64, f64) -> f64>(&self, bracket: &B, s: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.t.len() {
            if self.t[i] >= SERIES_RADIUS {
                acc += self.wk[i] * bracket(self.t[i], self.h[i]);
            }
        }
        acc + self.k_cut * bracket(1.0 - self.h_cut, self.h_cut) * self.h_cut / (2.0 - 2.0 * s)
    }

    fn integrate<B: Fn(f64, f64) -> f64>(&self, bracket: &B, f_r: f64, s: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.t.len() {
            acc += self.wk[i] * bracket(self.t[i], self.h[i]);
        }
        let tail = self.k_cut * bracket(1.0 - self.h_cut, self.h_cut) * self.h_cut / (2.0 - 2.0 * s);
        acc + tail + f_r * self.j_diff
    }
}

/// Radial principal-value integrator for one channel; nodes and kernel
/// values are independent of the evaluation point and built once.
pub struct RadialPv {
    pub order: Order,
    pub ell: u32,
    pub c_ns: f64,
    coarse: PvRule,
    fine: PvRule,
}

impl RadialPv {
    pub fn new(order: &Order, ell: u32) -> Result<Self> {
        let kern = SphereKernel::new(order, ell)?;
        Ok(Self {
            order: *order,
            ell,
            c_ns: riesz_constant(order.n, order.s)?,
            coarse: PvRule::build(&kern, 16, 2, 60, 1e-5),
            fine: PvRule::build(&kern, 24, 3, 90, 1e-6),
        })
    }

    /// `∫_0^1 k_ℓ B dt + f(r)∫_0^1 (k_0-k_ℓ)(t^{n-1}+t^{2s-1}) dt` for a
    /// caller-supplied bracket `B(t, 1-t)`; error from the coarse/fine gap.
    pub fn integral<B: Fn(f64, f64) -> f64>(&self, bracket: B, f_r: f64) -> Estimate {
        let a = self.coarse.integrate(&bracket, f_r, self.order.s);
        let b = self.fine.integrate(&bracket, f_r, self.order.s);
        Estimate { value: b, err: (a - b).abs() }
    }

    /// `∫_{1/4}^1 k_ℓ B dt`; pair with [`RadialPv::moment`] for brackets
    /// that are sums of powers near t = 0.
    pub fn integral_above<B: Fn(f64, f64) -> f64>(&self, bracket: B) -> Estimate {
        let a = self.coarse.integrate_above(&bracket, self.order.s);
        let b = self.fine.integrate_above(&bracket, self.order.s);
        Estimate { value: b, err: (a - b).abs() }
    }

    /// `∫_0^{1/4} k_ℓ B dt` by the graded rule.
    pub fn integral_below<B: Fn(f64, f64) -> f64>(&self, bracket: B) -> Estimate {
        let a = self.coarse.integrate_below(&bracket);
        let b = self.fine.integrate_below(&bracket);
        Estimate { value: b, err: (a - b).abs() }
    }

    /// `∫_0^{1/4} t^e (ln t)^j k_ℓ(t) dt` for j ∈ {0, 1}, from the kernel series.
    pub fn moment(&self, e: f64, log_power: u32) -> f64 {
        let t0 = SERIES_RADIUS;
        let lt0 = t0.ln();
        let mut acc = 0.0;
        for (k, &c) in self.fine.series.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let m = e + k as f64 + 1.0;
            let base = t0.powf(m) / m;
            acc += c * if log_power == 0 { base } else { base * (lt0 - 1.0 / m) };
        }
        acc
    }

    /// `(-Δ)^s(f Y_ℓ)(r)/Y_ℓ` for a radial profile f.
    pub fn frac_lap<F: Fn(f64) -> f64>(&self, f: F, r: f64) -> Estimate {
        let (n, s) = (self.order.nf(), self.order.s);
        let fr = f(r);
        let e = self.integral(
            |t, _h| (fr - f(r * t)) * t.powf(n - 1.0) + (fr - f(r / t)) * t.powf(2.0 * s - 1.0),
            fr,
        );
        let scale = self.c_ns * r.powf(-2.0 * s);
        Estimate { value: scale * e.value, err: scale * e.err }
    }
}

/// Shared, lazily built integrators keyed by (n, s, ℓ).
pub fn radial_pv(order: &Order, ell: u32) -> Result<Arc<RadialPv>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u64, u32), Arc<RadialPv>>>> = OnceLock::new();
    let key = (order.n, order.s.to_bits(), ell);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let built = Arc::new(RadialPv::new(order, ell)?);
    Ok(cache.lock().unwrap().entry(key).or_insert(built).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_kernel_closed_form() {
        // k_0(t) = 2π/((1+2s)t) [(1-t)^{-(1+2s)} - (1+t)^{-(1+2s)}] for n = 3
        let o = Order::new(3, 0.5).unwrap();
        let k = SphereKernel::new(&o, 0).unwrap();
        for &h in &[0.9, 0.5, 0.1, 1e-3, 1e-7, 1e-12] {
            let t: f64 = 1.0 - h;
            let e = 1.0 + 2.0 * o.s;
            let exact = 2.0 * PI / (e * t) * (h.powf(-e) - (1.0 + t).powf(-e));
            let (v, _) = k.eval(t, h);
            assert!((v - exact).abs() < 1e-11 * exact, "h={h}: {v} vs {exact}");
        }
    }

    #[test]
    fn three_dimensional_kernel_matches_quadrature() {
        let o = Order::new(3, 0.3).unwrap();
        let k = SphereKernel::new(&o, 0).unwrap();
        let gl = gauss_legendre(30);
        for &t in &[1e-6, 0.2, 0.6, 0.95] {
            let h: f64 = 1.0 - t;
            let mut acc = 0.0;
            let mut hi = PI;
            for lvl in 0..40 {
                let lo = if lvl == 39 { 0.0 } else { hi / 2.0 };
                let (c, hw) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                for (x, w) in gl.x.iter().zip(&gl.w) {
                    let th = c + hw * x;
                    let d = h * h + 4.0 * t * (th / 2.0).sin().powi(2);
                    acc += 2.0 * PI * d.powf(-(3.0 + 2.0 * o.s) / 2.0) * th.sin() * hw * w;
                }
                hi = lo;
            }
            let (v, _) = k.eval(t, h);
            assert!((v - acc).abs() < 1e-12 * acc, "t={t}: {v} vs {acc}");
        }
    }

    #[test]
    fn legendre_complement() {
        // n = 3, ell = 2: 1 - P_2 = 3(1-x)(1+x)/2
        let x: f64 = 0.3;
        let q = one_minus_legendre(3, 2, x, 1.0 - x);
        assert!((q - 1.5 * (1.0 - x) * (1.0 + x)).abs() < 1e-15);
        // n = 2 gives Chebyshev: 1 - cos(3θ)
        let th: f64 = 0.4;
        let q = one_minus_legendre(2, 3, th.cos(), 1.0 - th.cos());
        assert!((q - (1.0 - (3.0 * th).cos())).abs() < 1e-14);
    }
}
