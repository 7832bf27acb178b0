//! Ground states of `(Λ₀(D) + C(α)) v = v^{p-1}` on the cylinder.
//!
//! This is the Euler–Lagrange equation of the weighted quotient with unit
//! coefficient: every weight cancels in logarithmic variables. The iteration
//! is a renormalized (Petviashvili) fixed-point map followed by Newton steps
//! solved with GMRES preconditioned by `(Λ₀ + C)^{-1}`.

use serde::Serialize;

use crate::coeffs::coeff_quadrature;
use crate::cylcore::{dot, ChannelOp, CylGrid, CylProfile, Spectral};
use crate::error::{Error, Result};
use crate::linalg::gmres;
use crate::specfun::{channel_symbol, sphere_area, Params};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `v* exp(-τ²/4)` with `v* = (Λ₀(0)+C)^{1/(p-2)}`.
    Gaussian,
    /// The constant fixed point `v*` (non-decaying, test use).
    Constant,
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub init: Init,
    /// Double L (and N) until the profile decays at the window ends.
    pub auto_extend: bool,
    /// Re-solve on the doubled window to measure the windowing error.
    pub measure_l_delta: bool,
    /// Skip the decay check (constant fixed point).
    pub allow_nondecaying: bool,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 2000, damping: 0.5, init: Init::Gaussian, auto_extend: true, measure_l_delta: false, allow_nondecaying: false }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizerResult {
    pub params: Params,
    pub profile: CylProfile,
    pub coeff: f64,
    pub quotient: f64,
    pub el_residual: f64,
    pub slopes: (f64, f64),
    /// Fewer than four decades between peak and fit window.
    pub slope_warning: bool,
    pub center: f64,
    pub iterations: usize,
    pub l_convergence_delta: Option<f64>,
    pub trace: Vec<f64>,
    pub quotient_trace: Vec<f64>,
    /// Negative entries clamped in the nonlinearity, per iteration.
    pub clamps: Vec<usize>,
    /// α < 0: the computed state is the minimizer among radial profiles only.
    pub radial_constrained: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub quotient: f64,
    pub el_residual: f64,
    pub slopes: (f64, f64),
    pub center: f64,
    pub iterations: usize,
    pub l_convergence_delta: Option<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl MinimizerResult {
    pub fn summary(&self) -> Summary {
        Summary {
            quotient: self.quotient,
            el_residual: self.el_residual,
            slopes: self.slopes,
            center: self.center,
            iterations: self.iterations,
            l_convergence_delta: self.l_convergence_delta,
            l: self.profile.grid.l,
            n: self.profile.grid.n,
        }
    }
}

/// `Λ₀(0) + C(α)`, the multiplier at zero frequency.
pub fn bottom_symbol(params: &Params) -> Result<f64> {
    let c = coeff_quadrature(&params.order(), params.alpha)?;
    Ok(channel_symbol(&params.order(), 0)?.eval(0.0) + c)
}

/// The constant solution `(Λ₀(0)+C)^{1/(p-2)}`.
pub fn constant_solution(params: &Params) -> Result<f64> {
    Ok(bottom_symbol(params)?.powf(1.0 / (params.p - 2.0)))
}

/// Window and grid large enough for the expected profile: Gaussian core of
/// width `~sqrt(4a/((p-2)E))` near p = 2 and exponential tails of rate
/// `(n-2s)/2 - α`, with spacing at most 0.03.
pub fn default_grid(params: &Params) -> Result<CylGrid> {
    let e = bottom_symbol(params)?;
    let sym = channel_symbol(&params.order(), 0)?;
    let a = (sym.eval(0.05) - sym.eval(0.0)) / 0.0025;
    let decades = 1e8f64.ln() + 4.0;
    let core = (decades * 4.0 * a / ((params.p - 2.0) * e)).sqrt();
    let theta = params.order().half_gap() - params.alpha;
    let tail = decades / theta;
    let l = (1.2 * core.max(tail)).ceil();
    let n = ((2.0 * l / 0.03).ceil() as usize).next_power_of_two();
    CylGrid::new(l, n)
}

struct Equation {
    op: ChannelOp,
    c: f64,
    p: f64,
}

impl Equation {
    fn residual(&self, v: &[f64]) -> (Vec<f64>, f64) {
        let av = self.op.apply(v, self.c);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        let r: Vec<f64> = av
            .iter()
            .zip(v)
            .map(|(a, x)| {
                let nl = x.max(0.0).powf(self.p - 1.0);
                den = den.max(nl);
                let ri = a - nl;
                num = num.max(ri.abs());
                ri
            })
            .collect();
        (r, if den > 0.0 { num / den } else { f64::INFINITY })
    }

    fn quotient(&self, v: &[f64]) -> f64 {
        let g = self.op.grid();
        let av = self.op.apply(v, self.c);
        let star = dot(&g, &av, v);
        let lp = g.h() * v.iter().map(|x| x.abs().powf(self.p)).sum::<f64>();
        let om = sphere_area(self.op.order.n);
        om * star / (om * lp).powf(2.0 / self.p)
    }
}

fn iterate(eq: &Equation, mut v: Vec<f64>, opts: &SolveOpts, v_star: f64) -> Result<(Vec<f64>, usize, Vec<f64>, Vec<f64>, Vec<usize>)> {
    let g = eq.op.grid();
    let p = eq.p;
    let gamma = (p - 1.0) / (p - 2.0);
    let mut theta = opts.damping;
    let (mut trace, mut qtrace, mut clamps) = (Vec::new(), Vec::new(), Vec::new());
    let mut streak = 0;
    let mut q_prev = f64::NAN;
    let newton_switch = 1e-3;
    for it in 0..opts.max_iter {
        let (r, res) = eq.residual(&v);
        let q = eq.quotient(&v);
        let dq = (q - q_prev).abs();
        trace.push(res);
        qtrace.push(q);
        clamps.push(v.iter().filter(|x| **x < 0.0).count());
        if res <= opts.tol && (dq <= 1e-12 * q.abs() || res <= 1e-13) {
            return Ok((v, it, trace, qtrace, clamps));
        }
        q_prev = q;
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(*x));
        if !(vmax > 1e-12 * v_star) {
            return Err(Error::TrivialAttractor);
        }
        if res < newton_switch {
            // (A + C - (p-1)v^{p-2}) δ = -r, preconditioned by (A + C)^{-1}
            let w: Vec<f64> = v.iter().map(|x| (p - 1.0) * x.max(0.0).powf(p - 2.0)).collect();
            let rhs: Vec<f64> = eq.op.solve(&r, eq.c).iter().map(|x| -x).collect();
            let apply = |d: &[f64]| -> Vec<f64> {
                let wd: Vec<f64> = d.iter().zip(&w).map(|(a, b)| a * b).collect();
                let k = eq.op.solve(&wd, eq.c);
                d.iter().zip(&k).map(|(a, b)| a - b).collect()
            };
            if let Ok(delta) = gmres(apply, &rhs, 1e-13, 80, 20) {
                let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, b)| a + b).collect();
                let (_, tr) = eq.residual(&trial);
                if tr < res {
                    v = trial;
                    continue;
                }
            }
        }
        // renormalized fixed-point step
        let nl: Vec<f64> = v.iter().map(|x| x.max(0.0).powf(p - 1.0)).collect();
        let av = eq.op.apply(&v, eq.c);
        let m = dot(&g, &av, &v) / dot(&g, &nl, &v);
        let mut u = eq.op.solve(&nl, eq.c);
        let scale = m.powf(gamma);
        u.iter_mut().for_each(|x| *x *= scale);
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = (1.0 - theta) * *vi + theta * ui;
        }
        if trace.len() >= 2 && res < trace[trace.len() - 2] {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= 5 {
            theta = (theta * 1.5).min(1.0);
            streak = 0;
        }
    }
    let last = *trace.last().unwrap_or(&f64::INFINITY);
    Err(Error::NonConvergence { iterations: opts.max_iter, residual: last, trace })
}

/// Copy a profile onto a grid with the same spacing and twice the window.
fn pad_to(values: &[f64], from: CylGrid, to: CylGrid) -> Vec<f64> {
    let off = ((from.tau(0) - to.tau(0)) / to.h()).round() as usize;
    let mut out = vec![0.0; to.n];
    out[off..off + from.n].copy_from_slice(values);
    out
}

fn initial(grid: CylGrid, init: &Init, v_star: f64) -> Result<Vec<f64>> {
    Ok(match init {
        Init::Gaussian => grid.nodes().iter().map(|t| v_star * (-t * t / 4.0).exp()).collect(),
        Init::Constant => vec![v_star; grid.n],
        Init::Values(v) => {
            if v.len() != grid.n {
                return Err(Error::Domain(format!("initial profile has {} samples for N = {}", v.len(), grid.n)));
            }
            v.clone()
        }
    })
}

fn solve_fixed(params: &Params, grid: CylGrid, opts: &SolveOpts, init: Vec<f64>) -> Result<(Vec<f64>, usize, Vec<f64>, Vec<f64>, Vec<usize>, f64)> {
    let order = params.order();
    let c = coeff_quadrature(&order, params.alpha)?;
    let eq = Equation { op: ChannelOp::new(grid, &order, 0)?, c, p: params.p };
    let v_star = constant_solution(params)?;
    let (v, it, tr, qt, cl) = iterate(&eq, init, opts, v_star)?;
    let q = eq.quotient(&v);
    Ok((v, it, tr, qt, cl, q))
}

/// Positive ground state with unit-coefficient normalization.
pub fn solve_ground_state(params: &Params, grid: CylGrid, opts: &SolveOpts) -> Result<MinimizerResult> {
    let order = params.order();
    let v_star = constant_solution(params)?;
    let mut grid = grid;
    let mut init = initial(grid, &opts.init, v_star)?;
    let mut total = 0;
    loop {
        let (v, it, trace, qtrace, clamps, quotient) = solve_fixed(params, grid, opts, init)?;
        total += it;
        let prof = CylProfile::new(grid, v, order, Some(*params))?;
        if !opts.allow_nondecaying {
            if let Err(e) = prof.check_boundary() {
                if !opts.auto_extend || grid.l > 4000.0 {
                    return Err(e);
                }
                let bigger = CylGrid::new(2.0 * grid.l, 2 * grid.n)?;
                init = pad_to(&prof.values, grid, bigger);
                grid = bigger;
                continue;
            }
        }
        // tail nodes below the solve tolerance are unresolved, not a sign change
        let floor = opts.tol * prof.max_abs();
        if let Some(i) = prof.values.iter().position(|x| *x <= 0.0 && x.abs() > floor) {
            return Err(Error::Domain(format!("converged profile not positive at node {i} (value {:e}, max {:e})", prof.values[i], prof.max_abs())));
        }
        let mut res = MinimizerResult {
            params: *params,
            coeff: coeff_quadrature(&order, params.alpha)?,
            el_residual: *trace.last().unwrap(),
            profile: prof,
            quotient,
            slopes: (0.0, 0.0),
            slope_warning: true,
            center: 0.0,
            iterations: total,
            l_convergence_delta: None,
            trace,
            quotient_trace: qtrace,
            clamps,
            radial_constrained: params.alpha < 0.0,
        };
        if !opts.allow_nondecaying {
            res.center = peak_location(&res.profile);
            let (sl, warn) = decay_slopes(&res)?;
            res.slopes = sl;
            res.slope_warning = warn;
            if opts.measure_l_delta {
                let bigger = CylGrid::new(2.0 * grid.l, 2 * grid.n)?;
                let sub = SolveOpts { init: Init::Gaussian, ..opts.clone() };
                let (_, _, _, _, _, q2) = solve_fixed(params, bigger, &sub, pad_to(&res.profile.values, grid, bigger))?;
                res.l_convergence_delta = Some((q2 - quotient).abs() / quotient);
            }
        }
        return Ok(res);
    }
}

/// `Λ̃ = ‖W|x|^{-t}‖^{p-2}_{Lp}` from the profile.
pub fn lp_normalization(res: &MinimizerResult) -> f64 {
    let g = res.profile.grid;
    let p = res.params.p;
    let lp = sphere_area(res.params.n) * g.h() * res.profile.values.iter().map(|x| x.abs().powf(p)).sum::<f64>();
    lp.powf((p - 2.0) / p)
}

/// The scalar c making `c v` satisfy the equation in the Galerkin sense,
/// `c^{p-2} = ⟨(A+C)v, v⟩ / ⟨|v|^{p-1}, |v|⟩`, and the rescaled profile.
pub fn normalize_to_el(profile: &CylProfile, params: &Params) -> Result<(f64, CylProfile)> {
    let g = profile.grid;
    let v = &profile.values;
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::Domain("zero profile cannot be normalized".into()));
    }
    let c = coeff_quadrature(&params.order(), params.alpha)?;
    let op = ChannelOp::new(g, &params.order(), 0)?;
    let av = op.apply(v, c);
    let num = dot(&g, &av, v);
    let den = g.h() * v.iter().map(|x| x.abs().powf(params.p)).sum::<f64>();
    let scale = (num / den).powf(1.0 / (params.p - 2.0));
    Ok((scale, profile.with_values(v.iter().map(|x| scale * x).collect())))
}

/// Leftmost maximum, refined by a parabola through its neighbours and then
/// by Newton steps on the spectral interpolant's derivative.
pub fn peak_location(p: &CylProfile) -> f64 {
    let v = &p.values;
    let n = v.len();
    let mut i = 0;
    for k in 1..n {
        if v[k] > v[i] {
            i = k;
        }
    }
    let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    let den = a - 2.0 * b + c;
    let d = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    let mut t = p.grid.tau(i) + d * p.grid.h();
    if den >= 0.0 {
        return t;
    }
    let vh = Spectral::new(p.grid).forward(&p.values);
    let g = p.grid;
    // v'(τ) and v''(τ) from the trigonometric interpolant
    let derivs = |tau: f64| -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        for (j, z) in vh.iter().enumerate() {
            if j == g.n / 2 {
                continue;
            }
            let xi = g.xi(j);
            let e = num_complex::Complex64::from_polar(1.0, xi * tau);
            let w = z * e;
            d1 += -xi * w.im;
            d2 += -xi * xi * w.re;
        }
        (d1 / (2.0 * g.l), d2 / (2.0 * g.l))
    };
    for _ in 0..8 {
        let (d1, d2) = derivs(t);
        if d2 >= 0.0 {
            break;
        }
        let step = d1 / d2;
        t -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    t
}

/// Least-squares slopes of ln v on `[0.5L, 0.8L]` either side of the peak;
/// the last stretch is skipped because the periodic image of the opposite
/// tail dominates there. Returns `((θ₋, θ₊), warning)`.
pub fn decay_slopes(res: &MinimizerResult) -> Result<((f64, f64), bool)> {
    let p = &res.profile;
    let g = p.grid;
    let tc = res.center;
    let vmax = p.max_abs();
    let mut warn = false;
    let mut fit = |lo: f64, hi: f64| -> Result<f64> {
        let pts: Vec<(f64, f64)> = g
            .nodes()
            .iter()
            .zip(&p.values)
            .filter(|(t, v)| **t - tc >= lo && **t - tc <= hi && **v > 0.0)
            .map(|(t, v)| (*t, v.ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::Domain("too few points for a slope fit".into()));
        }
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / m, sy / m);
        let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
        let lowest = pts.iter().map(|(_, y)| *y).fold(f64::INFINITY, f64::min);
        if vmax.ln() - lowest < 4.0 * 10f64.ln() {
            warn = true;
        }
        Ok(sxy / sxx)
    };
    let left = fit(-0.8 * g.l, -0.5 * g.l)?;
    let right = fit(0.5 * g.l, 0.8 * g.l)?;
    Ok(((left, right), warn))
}

/// Shift a profile by `d` (spectral interpolation): returns `v(τ + d)`.
pub fn translate(p: &CylProfile, d: f64) -> CylProfile {
    let sp = Spectral::new(p.grid);
    let mut vh = sp.forward(&p.values);
    for (j, z) in vh.iter_mut().enumerate() {
        let xi = if j == p.grid.n / 2 { 0.0 } else { p.grid.xi(j) };
        *z *= num_complex::Complex64::from_polar(1.0, xi * d);
    }
    p.with_values(sp.inverse(&vh))
}

/// Centre the peak at τ = 0 and return `max_i |v(τ_i) - v(-τ_i)| / max v`.
pub fn center_and_check_even(p: &CylProfile) -> f64 {
    let c = peak_location(p);
    let q = translate(p, c);
    let v = &q.values;
    let n = v.len();
    let m = q.max_abs();
    if m == 0.0 {
        return 0.0;
    }
    (1..n).map(|i| (v[i] - v[n - i]).abs()).fold(0.0, f64::max) / m
}

/// Cylinder image of `∂_λ W_λ` at λ = 1: the τ-derivative of v.
pub fn dilation_mode(p: &CylProfile) -> CylProfile {
    p.with_values(Spectral::new(p.grid).derivative(&p.values))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub p: f64,
    pub sup_v: f64,
    pub m: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundTable {
    pub rows: Vec<BoundRow>,
    pub c: f64,
    pub kappa: f64,
}

/// `sup v` against `M = ‖W|x|^{-t}‖_{Lp}` across a family, with the
/// smallest constant C over a κ scan making `sup v ≤ C(M^{p-1} + M^{(p-1)^κ})`.
pub fn uniform_bound_check(results: &[MinimizerResult]) -> Result<BoundTable> {
    let mut raw = Vec::new();
    for r in results {
        r.profile.check_boundary()?;
        let g = r.profile.grid;
        let p = r.params.p;
        let m = (sphere_area(r.params.n) * g.h() * r.profile.values.iter().map(|x| x.abs().powf(p)).sum::<f64>()).powf(1.0 / p);
        raw.push((p, r.profile.max_abs(), m));
    }
    let bound = |kappa: f64| -> f64 {
        raw.iter().map(|(p, s, m)| s / (m.powf(p - 1.0) + m.powf((p - 1.0f64).powf(kappa)))).fold(0.0, f64::max)
    };
    let (mut best_k, mut best_c) = (1.0, f64::INFINITY);
    for i in 0..=40 {
        let k = 0.25 + 0.1 * i as f64;
        let c = bound(k);
        if c < best_c {
            best_c = c;
            best_k = k;
        }
    }
    let rows = raw
        .iter()
        .map(|&(p, s, m)| BoundRow { p, sup_v: s, m, ratio: s / (m.powf(p - 1.0) + m.powf((p - 1.0f64).powf(best_k))) })
        .collect();
    Ok(BoundTable { rows, c: best_c, kappa: best_k })
}
