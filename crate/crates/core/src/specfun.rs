//! Gamma functions, kernel normalizations and the exact multipliers of the
//! fractional Laplacian on homogeneous functions.
//!
//! For `|x|^{-γ} Y_ℓ` the operator acts diagonally,
//! `(-Δ)^s(|x|^{-γ}Y_ℓ) = λ_ℓ(γ)|x|^{-γ-2s}Y_ℓ`, with
//!
//! ```text
//! λ_ℓ(γ) = 4^s Γ((ℓ+n-γ)/2) Γ((ℓ+γ+2s)/2) / (Γ((ℓ+n-γ-2s)/2) Γ((ℓ+γ)/2)).
//! ```
//!
//! On the critical line `γ = (n-2s)/2 + iξ` the two Gamma pairs are complex
//! conjugates, which gives the real channel symbol `Λ_ℓ(ξ)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_core(z: Complex64) -> Complex64 {
    // valid for Re z >= 1/2
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// Principal-branch log-Gamma for complex arguments off the poles.
///
/// Arguments with small real part are shifted up by the recurrence rather
/// than reflected, so large imaginary parts never overflow.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        return lanczos_core(z);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.re < 0.5 {
        shift += w.ln();
        w += 1.0;
    }
    lanczos_core(w) - shift
}

/// log Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= 0.5 {
        lanczos_core(Complex64::new(x, 0.0)).re
    } else {
        // Γ(x) = Γ(x+1)/x
        lanczos_core(Complex64::new(x + 1.0, 0.0)).re - x.ln()
    }
}

/// Real Gamma function with sign; non-positive integers give NaN.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        lanczos_core(Complex64::new(x, 0.0)).re.exp()
    }
}

/// Surface area ω_{n-1} of the unit sphere in ℝⁿ (ω₀ = 2).
pub fn sphere_area(n: u32) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Dimension and order of the operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Order {
    pub n: u32,
    pub s: f64,
}

impl Order {
    pub fn new(n: u32, s: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension n must be at least 1".into()));
        }
        let cap = 1f64.min(n as f64 / 2.0);
        if !(s > 0.0 && s < cap) {
            return Err(Error::Domain(format!(
                "order s = {s} outside 0 < s < min(1, n/2) = {cap}"
            )));
        }
        Ok(Self { n, s })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// (n-2s)/2, the homogeneity of the Hardy-critical power.
    pub fn half_gap(&self) -> f64 {
        (self.nf() - 2.0 * self.s) / 2.0
    }

    pub fn two_star(&self) -> f64 {
        2.0 * self.nf() / (self.nf() - 2.0 * self.s)
    }
}

/// Validated parameter tuple (n, s, p, α).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Params {
    pub n: u32,
    pub s: f64,
    pub p: f64,
    pub alpha: f64,
}

impl Params {
    pub fn new(n: u32, s: f64, p: f64, alpha: f64) -> Result<Self> {
        let v = Self::violations(n, s, p, alpha);
        if v.is_empty() {
            Ok(Self { n, s, p, alpha })
        } else {
            Err(Error::Domain(v.join("; ")))
        }
    }

    /// Every violated window bound, one message each.
    pub fn violations(n: u32, s: f64, p: f64, alpha: f64) -> Vec<String> {
        let mut out = Vec::new();
        if n == 0 {
            out.push("n must satisfy n >= 1".to_string());
            return out;
        }
        let nf = n as f64;
        let cap = 1f64.min(nf / 2.0);
        if !(s > 0.0 && s < cap) {
            out.push(format!("s = {s} violates 0 < s < min(1, n/2) = {cap}"));
            return out;
        }
        let two_star = 2.0 * nf / (nf - 2.0 * s);
        if !(p > 2.0 && p < two_star) {
            out.push(format!(
                "p = {p} violates 2 < p < 2*_s = 2n/(n-2s) = {two_star}"
            ));
        }
        let hi = nf / 2.0 - s;
        if !(alpha > -2.0 * s && alpha < hi) {
            out.push(format!(
                "alpha = {alpha} violates -2s < alpha < n/2 - s, i.e. {} < alpha < {hi}",
                -2.0 * s
            ));
        }
        out
    }

    pub fn order(&self) -> Order {
        Order { n: self.n, s: self.s }
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// t = s - n(1/2 - 1/p), the Lp weight exponent.
    pub fn t(&self) -> f64 {
        self.s - self.nf() * (0.5 - 1.0 / self.p)
    }

    pub fn beta(&self) -> f64 {
        self.alpha + self.t()
    }

    pub fn two_star(&self) -> f64 {
        self.order().two_star()
    }
}

/// C_{n,s}: `(-Δ)^s f(x) = C_{n,s} PV∫ (f(x)-f(y))/|x-y|^{n+2s} dy` has symbol |ξ|^{2s}.
pub fn riesz_constant(n: u32, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) || n == 0 {
        return Err(Error::Domain(format!("riesz_constant needs n >= 1 and 0 < s < 1, got n={n}, s={s}")));
    }
    let nf = n as f64;
    let ln = s * 4f64.ln() + ln_gamma(nf / 2.0 + s) - (nf / 2.0) * PI.ln() - ln_gamma(1.0 - s);
    Ok(s * ln.exp())
}

/// C_{n,-s}: the fundamental solution of (-Δ)^s is C_{n,-s}|x|^{-(n-2s)}.
pub fn riesz_potential_constant(n: u32, s: f64) -> Result<f64> {
    let nf = n as f64;
    if !(s > 0.0 && 2.0 * s < nf) {
        return Err(Error::Domain(format!("riesz_potential_constant needs 0 < 2s < n, got n={n}, s={s}")));
    }
    Ok((ln_gamma(nf / 2.0 - s) - s * 4f64.ln() - (nf / 2.0) * PI.ln() - ln_gamma(s)).exp())
}

fn check_channel(order: &Order, ell: u32) -> Result<()> {
    if order.n == 1 && ell > 1 {
        return Err(Error::Domain(format!(
            "n = 1 has only the even (ell=0) and odd (ell=1) channels, got ell={ell}"
        )));
    }
    Ok(())
}

/// λ_ℓ(γ) from Gamma ratios, inside the admissible strip.
pub fn mellin_multiplier(order: &Order, ell: u32, gamma_: f64) -> Result<f64> {
    check_channel(order, ell)?;
    let (n, s, l) = (order.nf(), order.s, ell as f64);
    if !(gamma_ + l > 0.0) {
        return Err(Error::Domain(format!(
            "gamma + ell = {} must be positive",
            gamma_ + l
        )));
    }
    if !(gamma_ + 2.0 * s + l < n + 2.0 * l) {
        return Err(Error::Domain(format!(
            "gamma + 2s + ell = {} must be below n + 2 ell = {}",
            gamma_ + 2.0 * s + l,
            n + 2.0 * l
        )));
    }
    let lg = ln_gamma((l + n - gamma_) / 2.0) + ln_gamma((l + gamma_ + 2.0 * s) / 2.0)
        - ln_gamma((l + n - gamma_ - 2.0 * s) / 2.0)
        - ln_gamma((l + gamma_) / 2.0);
    Ok((2.0 * s * 2f64.ln() + lg).exp())
}

/// Λ_ℓ(ξ) = λ_ℓ((n-2s)/2 + iξ), real and even in ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSymbol {
    pub n: u32,
    pub s: f64,
    pub ell: u32,
    pub sph_eigenvalue: f64,
}

impl ChannelSymbol {
    pub fn eval(&self, xi: f64) -> f64 {
        let half = self.n as f64 / 2.0;
        let l = self.ell as f64;
        let y = xi.abs() / 2.0;
        let up = ln_gamma_complex(Complex64::new((l + half + self.s) / 2.0, y)).re;
        let dn = ln_gamma_complex(Complex64::new((l + half - self.s) / 2.0, y)).re;
        (2.0 * self.s * 2f64.ln() + 2.0 * (up - dn)).exp()
    }
}

pub fn channel_symbol(order: &Order, ell: u32) -> Result<ChannelSymbol> {
    check_channel(order, ell)?;
    let l = ell as f64;
    Ok(ChannelSymbol {
        n: order.n,
        s: order.s,
        ell,
        sph_eigenvalue: l * (l + order.nf() - 2.0),
    })
}

/// Sharp fractional Hardy constant, Λ₀(0).
pub fn hardy_constant(order: &Order) -> f64 {
    channel_symbol(order, 0).expect("channel 0 always exists").eval(0.0)
}

/// A with (-Δ)^s|x|^{-(n-2s)/2} = A|x|^{-(n+2s)/2}; equal to λ₀((n-2s)/2).
pub fn power_solution_constant(order: &Order) -> f64 {
    mellin_multiplier(order, 0, order.half_gap()).expect("critical power lies in the strip")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!((ln_gamma(0.1) - gamma(0.1).ln()).abs() < 1e-13);
    }

    #[test]
    fn complex_modulus_matches_closed_form() {
        // |Γ(1/2 + iy)|² = π / cosh(πy)
        for &y in &[0.0, 0.3, 2.0, 11.0, 40.0] {
            let re = ln_gamma_complex(Complex64::new(0.5, y)).re;
            let exact = 0.5 * (PI.ln() - (PI * y).cosh().ln());
            assert!((re - exact).abs() < 1e-12 * (1.0 + exact.abs()), "y={y}");
        }
        // small real part goes through the recurrence
        let re = ln_gamma_complex(Complex64::new(0.125, 3.0)).re;
        let via = ln_gamma_complex(Complex64::new(1.125, 3.0)).re - Complex64::new(0.125, 3.0).norm().ln();
        assert!((re - via).abs() < 1e-13);
    }

    #[test]
    fn window_violations_are_all_listed() {
        let v = Params::violations(3, 0.5, 6.0, 1.2);
        assert_eq!(v.len(), 2);
        assert!(Params::new(3, 0.5, 2.5, 0.0).is_ok());
    }

    #[test]
    fn one_dimensional_channels() {
        let o = Order::new(1, 0.25).unwrap();
        assert!(channel_symbol(&o, 2).is_err());
        assert_eq!(channel_symbol(&o, 1).unwrap().sph_eigenvalue, 0.0);
    }
}
