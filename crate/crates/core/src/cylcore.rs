//! Logarithmic-radius discretization.
//!
//! A radial field `W(r)` is stored as `v(τ) = e^{(n-2s)τ/2} W(e^τ)` on a
//! uniform periodic grid in `τ = ln r`. In these variables
//! `r^{(n+2s)/2}(-Δ)^s(W Y_ℓ) = (Λ_ℓ(D) v) Y_ℓ`, so the operator is a Fourier
//! multiplier and dilations are translations.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::coeffs::coeff_quadrature;
use crate::error::{Error, Result};
use crate::kernel::radial_pv;
use crate::quad::{integrate, Estimate};
use crate::specfun::{channel_symbol, riesz_constant, sphere_area, Order, Params};

/// Edge-to-peak ratio below which a profile counts as decayed.
pub const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylGrid {
    pub l: f64,
    pub n: usize,
}

impl CylGrid {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::Domain(format!("grid size N = {n} must be a power of two >= 8")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Domain(format!("half-length L = {l} must be positive")));
        }
        Ok(Self { l, n })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn tau(&self, i: usize) -> f64 {
        -self.l + self.h() * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.tau(i)).collect()
    }

    /// Integer wavenumber of FFT slot j (natural FFT ordering).
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn xi(&self, j: usize) -> f64 {
        PI * self.wavenumber(j) as f64 / self.l
    }

    /// Index of τ = 0.
    pub fn center(&self) -> usize {
        self.n / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylProfile {
    pub grid: CylGrid,
    pub values: Vec<f64>,
    pub order: Order,
    pub params: Option<Params>,
}

impl CylProfile {
    pub fn new(grid: CylGrid, values: Vec<f64>, order: Order, params: Option<Params>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Domain(format!("{} samples for a grid of {}", values.len(), grid.n)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, values, order, params })
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self { grid: self.grid, values, order: self.order, params: self.params }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn edge_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.values[0].abs().max(self.values[self.grid.n - 1].abs()) / m
    }

    pub fn check_boundary(&self) -> Result<()> {
        let ratio = self.edge_ratio();
        if ratio > BOUNDARY_TOL {
            return Err(Error::BoundaryNotSmall { ratio, suggested_l: 2.0 * self.grid.l });
        }
        Ok(())
    }
}

/// `v(τ) = e^{(n-2s)τ/2} W(e^τ)`.
pub fn to_cylinder<F: Fn(f64) -> f64>(w: F, grid: CylGrid, order: Order, params: Option<Params>) -> Result<CylProfile> {
    let g = order.half_gap();
    let values = grid.nodes().into_iter().map(|t| (g * t).exp() * w(t.exp())).collect();
    CylProfile::new(grid, values, order, params)
}

/// `W` sampled at `r_i = e^{τ_i}` onto the cylinder.
pub fn samples_to_cylinder(w: &[f64], grid: CylGrid, order: Order, params: Option<Params>) -> Result<CylProfile> {
    if w.len() != grid.n {
        return Err(Error::Domain(format!("{} samples for a grid of {}", w.len(), grid.n)));
    }
    let g = order.half_gap();
    let values = grid.nodes().iter().zip(w).map(|(t, w)| (g * t).exp() * w).collect();
    CylProfile::new(grid, values, order, params)
}

/// `(r_i, W(r_i))` pairs.
pub fn from_cylinder(p: &CylProfile) -> Vec<(f64, f64)> {
    let g = p.order.half_gap();
    p.grid.nodes().into_iter().zip(&p.values).map(|(t, v)| (t.exp(), (-g * t).exp() * v)).collect()
}

/// Forward/inverse transforms with the grid convention
/// `v̂_j = h Σ_i v_i e^{-iξ_j τ_i}`.
#[derive(Clone)]
pub struct Spectral {
    pub grid: CylGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: CylGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self { grid, fwd: planner.plan_fft_forward(grid.n), inv: planner.plan_fft_inverse(grid.n) }
    }

    pub fn forward(&self, v: &[f64]) -> Vec<Complex64> {
        let h = self.grid.h();
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (j, z) in buf.iter_mut().enumerate() {
            // e^{-iξ_j τ_0} = e^{iπk} = (-1)^k
            let sign = if self.grid.wavenumber(j) % 2 == 0 { h } else { -h };
            *z *= sign;
        }
        buf
    }

    pub fn inverse(&self, vh: &[Complex64]) -> Vec<f64> {
        let h = self.grid.h();
        let nf = self.grid.n as f64;
        let mut buf: Vec<Complex64> = vh
            .iter()
            .enumerate()
            .map(|(j, &z)| if self.grid.wavenumber(j) % 2 == 0 { z } else { -z })
            .collect();
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re / (h * nf)).collect()
    }

    /// Real multiplier `m(ξ_j)` applied to `v`.
    pub fn multiply(&self, v: &[f64], m: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let nf = self.grid.n as f64;
        for (z, &mj) in buf.iter_mut().zip(m) {
            *z *= mj / nf;
        }
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Hermitian complex multiplier; the Nyquist mode keeps its real part.
    pub fn multiply_complex(&self, v: &[f64], m: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let nf = self.grid.n as f64;
        for (j, (z, mj)) in buf.iter_mut().zip(m).enumerate() {
            let mj = if j == self.grid.n / 2 { Complex64::new(mj.re, 0.0) } else { *mj };
            *z *= mj / nf;
        }
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Spectral derivative d/dτ; the Nyquist mode is dropped.
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        let nf = self.grid.n as f64;
        for (j, z) in buf.iter_mut().enumerate() {
            if j == self.grid.n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, self.grid.xi(j) / nf);
            }
        }
        self.inv.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }
}

/// `Λ_ℓ(D) + shift` on one grid, with the symbol tabulated once.
#[derive(Clone)]
pub struct ChannelOp {
    pub ell: u32,
    pub order: Order,
    pub spectral: Spectral,
    pub symbol: Vec<f64>,
}

impl ChannelOp {
    pub fn new(grid: CylGrid, order: &Order, ell: u32) -> Result<Self> {
        let sym = channel_symbol(order, ell)?;
        let symbol = (0..grid.n).map(|j| sym.eval(grid.xi(j))).collect();
        Ok(Self { ell, order: *order, spectral: Spectral::new(grid), symbol })
    }

    pub fn grid(&self) -> CylGrid {
        self.spectral.grid
    }

    pub fn apply(&self, v: &[f64], shift: f64) -> Vec<f64> {
        let m: Vec<f64> = self.symbol.iter().map(|x| x + shift).collect();
        self.spectral.multiply(v, &m)
    }

    /// `(Λ_ℓ(D) + shift)^{-1} v`; needs `Λ_ℓ + shift > 0`.
    pub fn solve(&self, v: &[f64], shift: f64) -> Vec<f64> {
        let m: Vec<f64> = self.symbol.iter().map(|x| 1.0 / (x + shift)).collect();
        self.spectral.multiply(v, &m)
    }

    /// Arbitrary function of the symbol, `f(Λ_ℓ(D))`.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, v: &[f64], f: F) -> Vec<f64> {
        let m: Vec<f64> = self.symbol.iter().map(|&x| f(x)).collect();
        self.spectral.multiply(v, &m)
    }
}

/// C(α) for a profile's parameters, or 0 for profiles without a weight.
pub fn profile_coeff(p: &CylProfile) -> Result<f64> {
    match p.params {
        Some(pr) => coeff_quadrature(&pr.order(), pr.alpha),
        None => Ok(0.0),
    }
}

/// Cylinder image of `(-Δ)^s + C(α)|x|^{-2s}` on channel ℓ, after the
/// boundary-smallness check.
pub fn apply_channel_operator(p: &CylProfile, ell: u32, include_coeff: bool) -> Result<CylProfile> {
    p.check_boundary()?;
    let op = ChannelOp::new(p.grid, &p.order, ell)?;
    let c = if include_coeff { profile_coeff(p)? } else { 0.0 };
    Ok(p.with_values(op.apply(&p.values, c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFormReport {
    pub hs_part: f64,
    pub hardy_part: f64,
    pub lp_part: f64,
    pub star_norm_sq: f64,
    pub quotient: f64,
}

/// Grid inner product `h Σ a_i b_i`.
pub fn dot(grid: &CylGrid, a: &[f64], b: &[f64]) -> f64 {
    grid.h() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

/// Norms and the quotient `F = ‖w‖*² / ‖w|x|^{-t}‖²_{Lp}` of a profile on
/// channel ℓ (angular factor normalized to unit mean square).
pub fn quadratic_forms(p: &CylProfile, ell: u32, params: &Params) -> Result<QuadraticFormReport> {
    let om = sphere_area(p.order.n);
    let g = p.grid;
    let hardy_part = om * dot(&g, &p.values, &p.values);
    if hardy_part == 0.0 {
        return Err(Error::Domain("zero profile: quotient undefined".into()));
    }
    let vh = Spectral::new(g).forward(&p.values);
    let sym = channel_symbol(&p.order, ell)?;
    let hs_part = om / (2.0 * g.l) * vh.iter().enumerate().map(|(j, z)| sym.eval(g.xi(j)) * z.norm_sqr()).sum::<f64>();
    let lp_part = om * g.h() * p.values.iter().map(|v| v.abs().powf(params.p)).sum::<f64>();
    let c = coeff_quadrature(&params.order(), params.alpha)?;
    let star_norm_sq = hs_part + c * hardy_part;
    Ok(QuadraticFormReport { hs_part, hardy_part, lp_part, star_norm_sq, quotient: star_norm_sq / lp_part.powf(2.0 / params.p) })
}

/// Tolerance for the outer radial integrals of the direct seminorms.
const OUTER_TOL: f64 = 1e-10;

fn outer_integral<F: Fn(f64) -> f64>(f: F, what: &str) -> Result<Estimate> {
    // (0, 1] in r, then (1, ∞) through r = 1/σ
    let a = integrate(&f, 0.0, 1.0, true, false, OUTER_TOL, what)?;
    let b = integrate(|sg: f64| if sg > 0.0 { f(1.0 / sg) / (sg * sg) } else { 0.0 }, 0.0, 1.0, true, false, OUTER_TOL, what)?;
    Ok(Estimate { value: a.value + b.value, err: a.err + b.err })
}

/// `∬ (u(x)-u(y))² / (|x|^α |x-y|^{n+2s} |y|^α) dx dy` for a radial `u`
/// rapidly vanishing at 0 and ∞.
pub fn direct_seminorm_ckn<F: Fn(f64) -> f64>(u: F, order: &Order, alpha: f64) -> Result<Estimate> {
    let pv = radial_pv(order, 0)?;
    let (n, s) = (order.nf(), order.s);
    let om = sphere_area(order.n);
    let inner = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        let ur = u(r);
        // pairs with |y| < |x|, doubled
        let e = pv.integral(|t, _h| (ur - u(r * t)).powi(2) * t.powf(n - 1.0 - alpha), 0.0);
        2.0 * om * r.powf(n - 1.0 - 2.0 * s - 2.0 * alpha) * e.value
    };
    outer_integral(inner, "weighted seminorm")
}

/// `‖φ‖²_{Ḣs} = (C_{n,s}/2) ∬ (φ(x)-φ(y))²/|x-y|^{n+2s}` for a radial φ.
pub fn direct_seminorm_hs<F: Fn(f64) -> f64>(phi: F, order: &Order) -> Result<Estimate> {
    let c = riesz_constant(order.n, order.s)?;
    let e = direct_seminorm_ckn(phi, order, 0.0)?;
    Ok(Estimate { value: c / 2.0 * e.value, err: c / 2.0 * e.err })
}

/// `‖w|x|^{-s}‖²_{L²}` for radial w.
pub fn direct_hardy_term<F: Fn(f64) -> f64>(w: F, order: &Order) -> Result<Estimate> {
    let (n, s) = (order.nf(), order.s);
    let om = sphere_area(order.n);
    let e = outer_integral(|r| if r > 0.0 { w(r).powi(2) * r.powf(n - 1.0 - 2.0 * s) } else { 0.0 }, "hardy term")?;
    Ok(Estimate { value: om * e.value, err: om * e.err })
}

/// Relative defect of `(C_{n,s}/2)‖u‖²_{D^s_α} = ‖w‖²_{Ḣs} + C(α)‖w|x|^{-s}‖²` with `w = r^{-α}u`.
pub fn check_transform_identity<F: Fn(f64) -> f64>(u: F, order: &Order, alpha: f64) -> Result<f64> {
    let c = riesz_constant(order.n, order.s)?;
    let lhs = c / 2.0 * direct_seminorm_ckn(&u, order, alpha)?.value;
    let w = |r: f64| r.powf(-alpha) * u(r);
    let hs = direct_seminorm_hs(w, order)?.value;
    let hardy = direct_hardy_term(w, order)?.value;
    let rhs = hs + coeff_quadrature(order, alpha)? * hardy;
    Ok((lhs - rhs).abs() / lhs.abs())
}

/// Shortest round-trip decimal; exponent form outside [1e-4, 1e16).
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub n: u32,
    pub s: f64,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub kind: String,
}

/// Write `contents` to `path` through a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn profile_csv(p: &CylProfile) -> String {
    let mut out = String::from("tau,v\n");
    for (t, v) in p.grid.nodes().iter().zip(&p.values) {
        out.push_str(&fmt_num(*t));
        out.push(',');
        out.push_str(&fmt_num(*v));
        out.push('\n');
    }
    out
}

/// CSV `tau,v` plus the JSON sidecar next to it.
pub fn write_profile(path: &Path, p: &CylProfile, kind: &str) -> Result<()> {
    let side = Sidecar {
        n: p.order.n,
        s: p.order.s,
        p: p.params.map(|x| x.p),
        alpha: p.params.map(|x| x.alpha),
        l: p.grid.l,
        big_n: p.grid.n,
        kind: kind.to_string(),
    };
    write_atomic(path, profile_csv(p).as_bytes())?;
    write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&side)?.as_bytes())?;
    Ok(())
}

pub fn read_profile(path: &Path) -> Result<(CylProfile, Sidecar)> {
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("tau,v") {
        return Err(Error::Cache(format!("{}: missing tau,v header", path.display())));
    }
    let mut values = Vec::with_capacity(side.big_n);
    for (i, line) in lines.enumerate() {
        let v = line
            .split(',')
            .nth(1)
            .and_then(|x| x.parse::<f64>().ok())
            .ok_or_else(|| Error::Cache(format!("{}: bad row {}", path.display(), i + 1)))?;
        values.push(v);
    }
    let grid = CylGrid::new(side.l, side.big_n)?;
    let order = Order::new(side.n, side.s)?;
    let params = match (side.p, side.alpha) {
        (Some(p), Some(a)) => Some(Params::new(side.n, side.s, p, a)?),
        _ => None,
    };
    Ok((CylProfile::new(grid, values, order, params)?, side))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.0, -2.5, 1e-5, 3.0e-300, 0.1 + 0.2, 12345678.9, 1e17, f64::MIN_POSITIVE] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_num(1e-5), "1e-5");
        assert_eq!(fmt_num(0.5), "0.5");
    }

    #[test]
    fn power_profile_is_flat() {
        let o = Order::new(3, 0.5).unwrap();
        let g = CylGrid::new(10.0, 64).unwrap();
        let p = to_cylinder(|r| r.powf(-o.half_gap()), g, o, None).unwrap();
        assert!(p.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
