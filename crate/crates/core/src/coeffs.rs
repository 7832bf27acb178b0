//! The weight coefficient C(α).
//!
//! Writing `w = |x|^{-α}u` turns the two-weight seminorm into
//! `‖w‖²_{Ḣs} + C(α)‖w|x|^{-s}‖²_{L²}`. On the unit ball the coefficient is
//!
//! ```text
//! C(α) = C_{n,s} ∫_0^1 (1 - t^α)(t^{-α} - t^{2s-n}) t^{n-1} k_0(t) dt
//! ```
//!
//! with `k_0` the sphere-averaged kernel. A second, independent value comes
//! from the pointwise operator identity applied to a test profile.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::kernel::radial_pv;
use crate::quad::Estimate;
use crate::specfun::Order;

/// Accepted gap between the two routes, relative to max(1, |C|).
pub const ROUTE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CoeffResult {
    pub value: f64,
    pub route_a: f64,
    pub route_b: f64,
    pub est_error: f64,
    pub derivative: f64,
}

fn check_alpha(order: &Order, alpha: f64) -> Result<()> {
    let hi = order.half_gap();
    if !(alpha > -2.0 * order.s && alpha < hi) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} violates -2s < alpha < n/2 - s, i.e. {} < alpha < {hi}",
            -2.0 * order.s
        )));
    }
    Ok(())
}

// ln t for t = 1 - h, accurate near the diagonal
fn log_t(t: f64, h: f64) -> f64 {
    if h < 0.5 {
        (-h).ln_1p()
    } else {
        t.ln()
    }
}

fn ball_integral(order: &Order, alpha: f64, deriv: bool) -> Result<Estimate> {
    check_alpha(order, alpha)?;
    let pv = radial_pv(order, 0)?;
    let (n, s) = (order.nf(), order.s);
    // [0, 1/4] from power moments of the kernel series: the integrand there
    // is t^{n-1-α} - t^{n-1} - t^{2s-1} + t^{α+2s-1}, or (t^{α+2s-1} - t^{n-1-α}) ln t
    let (near, e) = if deriv {
        let near = pv.moment(alpha + 2.0 * s - 1.0, 1) - pv.moment(n - 1.0 - alpha, 1);
        let e = pv.integral_above(|t, h| {
            let lt = log_t(t, h);
            t.powf(n - 1.0 - alpha) * (lt * (2.0 * alpha + 2.0 * s - n)).exp_m1() * lt
        });
        (near, e)
    } else {
        let near = (pv.moment(n - 1.0 - alpha, 0) - pv.moment(n - 1.0, 0))
            + (pv.moment(alpha + 2.0 * s - 1.0, 0) - pv.moment(2.0 * s - 1.0, 0));
        let e = pv.integral_above(|t, h| {
            let lt = log_t(t, h);
            -(alpha * lt).exp_m1() * t.powf(2.0 * s - 1.0) * ((n - 2.0 * s - alpha) * lt).exp_m1()
        });
        (near, e)
    };
    let e = Estimate { value: near + e.value, err: e.err };
    Ok(Estimate { value: pv.c_ns * e.value, err: pv.c_ns * e.err })
}

fn accept(est: Estimate, what: &str) -> Result<f64> {
    if est.err > 1e-9 * est.value.abs().max(1.0) {
        return Err(Error::Quadrature { what: what.to_string(), estimate: est.err });
    }
    Ok(est.value)
}

type Memo = RwLock<HashMap<(u32, u64, i64), f64>>;

fn memo() -> &'static Memo {
    static M: OnceLock<Memo> = OnceLock::new();
    M.get_or_init(|| RwLock::new(HashMap::new()))
}

/// C(α) from the ball-reduced integral. Memoized on (n, s, α to 1e-12).
pub fn coeff_quadrature(order: &Order, alpha: f64) -> Result<f64> {
    let key = (order.n, order.s.to_bits(), (alpha * 1e12).round() as i64);
    if let Some(v) = memo().read().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = accept(ball_integral(order, alpha, false)?, "C(alpha)")?;
    memo().write().unwrap().insert(key, v);
    Ok(v)
}

/// dC/dα, negative throughout the window.
pub fn coeff_derivative(order: &Order, alpha: f64) -> Result<f64> {
    accept(ball_integral(order, alpha, true)?, "dC/dalpha")
}

/// A smooth radial test profile, rapidly vanishing at 0 and ∞.
#[derive(Debug, Clone, Copy)]
pub struct LogBump {
    pub center: f64,
    pub width: f64,
}

impl LogBump {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let z = (r.ln() - self.center) / self.width;
        (-0.5 * z * z).exp()
    }
}

/// `r^{2s}(C_{n,s} r^α L_{s,α}u(r) - (-Δ)^s w(r)) / w(r)` with `w = r^{-α}u`,
/// both operators by direct principal-value quadrature.
pub fn coeff_oracle<F: Fn(f64) -> f64>(order: &Order, alpha: f64, u: F, r: f64) -> Result<Estimate> {
    check_alpha(order, alpha)?;
    let (n, s) = (order.nf(), order.s);
    let ur = u(r);
    let wr = r.powf(-alpha) * ur;
    if wr.abs() < 1e-8 {
        return Err(Error::Domain(format!("test profile too small at r = {r}: w = {wr:e}")));
    }
    let pv = radial_pv(order, 0)?;
    // u(r) t^{α+2s-1} is nearly non-integrable as α → -2s; take it from the
    // kernel moments below t = 1/4
    let below = pv.integral_below(|t, _h| (ur - u(r * t)) * t.powf(n - 1.0 - alpha) - u(r / t) * t.powf(alpha + 2.0 * s - 1.0));
    let above = pv.integral_above(|t, _h| {
        (ur - u(r * t)) * t.powf(n - 1.0 - alpha) + (ur - u(r / t)) * t.powf(alpha + 2.0 * s - 1.0)
    });
    let weighted = Estimate {
        value: below.value + above.value + ur * pv.moment(alpha + 2.0 * s - 1.0, 0),
        err: below.err + above.err,
    };
    let plain = pv.frac_lap(|x| x.powf(-alpha) * u(x), r);
    let scale = pv.c_ns * r.powf(-alpha - 2.0 * s);
    let first = scale * weighted.value;
    let r2s = r.powf(2.0 * s);
    let value = r2s * (first - plain.value) / wr;
    let err = r2s * (scale * weighted.err + plain.err) / wr.abs();
    Ok(Estimate { value, err })
}

/// Both routes plus the derivative; fails when the routes disagree.
pub fn coeff(order: &Order, alpha: f64) -> Result<CoeffResult> {
    let route_a = coeff_quadrature(order, alpha)?;
    let bump = LogBump { center: 0.0, width: 0.6 };
    let route_b = coeff_oracle(order, alpha, |r| bump.eval(r), 1.0)?.value;
    let est_error = (route_a - route_b).abs();
    if est_error > ROUTE_TOL * route_a.abs().max(1.0) {
        return Err(Error::Quadrature { what: format!("C({alpha}) route agreement"), estimate: est_error });
    }
    Ok(CoeffResult { value: route_a, route_a, route_b, est_error, derivative: coeff_derivative(order, alpha)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishes_at_zero_weight() {
        let o = Order::new(3, 0.5).unwrap();
        assert!(coeff_quadrature(&o, 0.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn out_of_window_rejected() {
        let o = Order::new(3, 0.5).unwrap();
        assert!(coeff_quadrature(&o, -1.0).is_err());
        assert!(coeff_quadrature(&o, 1.0).is_err());
    }
}
