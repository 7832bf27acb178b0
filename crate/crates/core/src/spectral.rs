//! Linearization at a ground state: `(Λ_ℓ(D) + C) g = μ v^{p-2} g`.
//!
//! The generalized problem is solved through the compact symmetric operator
//! `T = D^{1/2}(Λ_ℓ + C)^{-1}D^{1/2}`, `D = diag(v^{p-2})`, whose top
//! eigenvalues are `1/μ`. Nodes with negligible weight get `D = 0`, which
//! eliminates them exactly instead of creating spurious modes at the edges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cylcore::{dot, ChannelOp, CylProfile};
use crate::error::{Error, Result};
use crate::linalg::lanczos_top;
use crate::solver::{dilation_mode, solve_ground_state, MinimizerResult, SolveOpts};
use crate::specfun::{sphere_area, Order, Params};

/// Weights below this fraction of the maximum are dropped.
pub const WEIGHT_CUTOFF: f64 = 1e-14;
/// Classification margin on `ν₁ - (p-1)`.
pub const MARGIN: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct EigenReport {
    pub channel: u32,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<CylProfile>,
    pub residuals: Vec<f64>,
    pub rayleigh: Vec<f64>,
    /// max |⟨g_i, v^{p-2} g_j⟩| over i ≠ j.
    pub ortho_defect: f64,
    pub retained_nodes: usize,
}

fn weights(res: &MinimizerResult) -> (Vec<f64>, usize) {
    let p = res.params.p;
    let raw: Vec<f64> = res.profile.values.iter().map(|x| x.max(0.0).powf(p - 2.0)).collect();
    let m = raw.iter().fold(0.0f64, |a, b| a.max(*b));
    let mut kept = 0;
    let d = raw
        .into_iter()
        .map(|x| {
            if x >= WEIGHT_CUTOFF * m {
                kept += 1;
                x
            } else {
                0.0
            }
        })
        .collect();
    (d, kept)
}

/// Lowest `k` eigenpairs on channel ℓ, ascending; eigenvectors are
/// normalized to `h Σ v^{p-2} g² = 1`.
pub fn channel_spectrum(res: &MinimizerResult, ell: u32, k: usize) -> Result<EigenReport> {
    let grid = res.profile.grid;
    let op = ChannelOp::new(grid, &res.profile.order, ell)?;
    let c = res.coeff;
    let (d, kept) = weights(res);
    let sq: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    let t_apply = |y: &[f64]| -> Vec<f64> {
        let a: Vec<f64> = y.iter().zip(&sq).map(|(a, b)| a * b).collect();
        op.solve(&a, c).iter().zip(&sq).map(|(a, b)| a * b).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + ell as u64);
    let start: Vec<f64> = sq.iter().map(|s| s * rng.random_range(0.5..1.5)).collect();
    let steps = 400.min(kept);
    let pairs = lanczos_top(t_apply, &start, k, steps, 1e-13)?;
    let mut eigenvalues = Vec::new();
    let mut eigenvectors = Vec::new();
    let mut residuals = Vec::new();
    let mut rayleigh = Vec::new();
    for (t, y) in pairs {
        let mu = 1.0 / t;
        let a: Vec<f64> = y.iter().zip(&sq).map(|(a, b)| a * b).collect();
        let mut g: Vec<f64> = op.solve(&a, c).iter().map(|x| mu * x).collect();
        let wn = dot(&grid, &g, &g.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>()).sqrt();
        g.iter_mut().for_each(|x| *x /= wn);
        // sign convention: positive at the largest-weight node
        let imax = (0..g.len()).max_by(|&i, &j| (d[i] * g[i].abs()).partial_cmp(&(d[j] * g[j].abs())).unwrap()).unwrap_or(0);
        if g[imax] < 0.0 {
            g.iter_mut().for_each(|x| *x = -*x);
        }
        let ag = op.apply(&g, c);
        let dg: Vec<f64> = g.iter().zip(&d).map(|(a, b)| a * b).collect();
        let r: Vec<f64> = ag.iter().zip(&dg).map(|(a, b)| a - mu * b).collect();
        residuals.push(dot(&grid, &r, &r).sqrt() / dot(&grid, &ag, &ag).sqrt());
        rayleigh.push(dot(&grid, &ag, &g) / dot(&grid, &dg, &g));
        eigenvalues.push(mu);
        eigenvectors.push(res.profile.with_values(g));
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::Eigen { worst });
    }
    let mut ortho_defect = 0.0f64;
    for (i, gi) in eigenvectors.iter().enumerate() {
        let dgi: Vec<f64> = gi.values.iter().zip(&d).map(|(a, b)| a * b).collect();
        for gj in &eigenvectors[i + 1..] {
            ortho_defect = ortho_defect.max(dot(&grid, &dgi, &gj.values).abs());
        }
    }
    Ok(EigenReport { channel: ell, eigenvalues, eigenvectors, residuals, rayleigh, ortho_defect, retained_nodes: kept })
}

/// Channels carried by dimension n.
pub fn channels(order: &Order, max_ell: u32) -> Vec<u32> {
    if order.n == 1 {
        (0..=max_ell.min(1)).collect()
    } else {
        (0..=max_ell).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelMargin {
    pub ell: u32,
    pub nearest: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegReport {
    pub mu0: f64,
    pub mu1: f64,
    pub normalization_ok: bool,
    pub ground_similarity: f64,
    pub dilation_similarity: f64,
    /// Radial eigenvalues within `MARGIN` of p-1 (expected: exactly one).
    pub radial_kernel_dim: usize,
    pub margins: Vec<ChannelMargin>,
    pub inconclusive: bool,
    pub pass: bool,
}

/// `|⟨a, b⟩| / (‖a‖‖b‖)`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    ab.abs() / (aa * bb).sqrt()
}

/// The kernel of the linearization at `μ = p-1` is the dilation mode in
/// channel 0 and trivial in channels 1..=3.
pub fn verify_nondegeneracy(res: &MinimizerResult) -> Result<NondegReport> {
    let pm1 = res.params.p - 1.0;
    let radial = channel_spectrum(res, 0, 4)?;
    let (mu0, mu1) = (radial.eigenvalues[0], radial.eigenvalues[1]);
    let dil = dilation_mode(&res.profile);
    let ground_similarity = cosine(&radial.eigenvectors[0].values, &res.profile.values);
    let dilation_similarity = cosine(&radial.eigenvectors[1].values, &dil.values);
    let radial_kernel_dim = radial.eigenvalues.iter().filter(|m| (*m - pm1).abs() <= MARGIN).count();
    let mut margins = Vec::new();
    let rest: Vec<f64> = radial.eigenvalues.iter().copied().filter(|m| (m - pm1).abs() > MARGIN).collect();
    let nearest0 = rest.iter().copied().min_by(|a, b| (a - pm1).abs().partial_cmp(&(b - pm1).abs()).unwrap()).unwrap_or(f64::INFINITY);
    margins.push(ChannelMargin { ell: 0, nearest: nearest0, margin: (nearest0 - pm1).abs() });
    for ell in channels(&res.profile.order, 3).into_iter().skip(1) {
        let rep = channel_spectrum(res, ell, 2)?;
        let nearest = rep.eigenvalues.iter().copied().min_by(|a, b| (a - pm1).abs().partial_cmp(&(b - pm1).abs()).unwrap()).unwrap();
        margins.push(ChannelMargin { ell, nearest, margin: (nearest - pm1).abs() });
    }
    let normalization_ok = (mu0 - 1.0).abs() <= 1e-6;
    let inconclusive = margins.iter().any(|m| m.margin < 1e-8);
    let pass = normalization_ok && radial_kernel_dim == 1 && (mu1 - pm1).abs() <= MARGIN && !inconclusive;
    Ok(NondegReport { mu0, mu1, normalization_ok, ground_similarity, dilation_similarity, radial_kernel_dim, margins, inconclusive, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    RadialStable,
    Channel1Unstable,
    Boundary,
}

impl Class {
    pub fn label(&self) -> &'static str {
        match self {
            Class::RadialStable => "radial-stable",
            Class::Channel1Unstable => "channel-1-unstable",
            Class::Boundary => "boundary",
        }
    }
}

pub fn classify(nu1: f64, p: f64) -> Class {
    let gap = nu1 - (p - 1.0);
    if gap >= MARGIN {
        Class::RadialStable
    } else if gap <= -MARGIN {
        Class::Channel1Unstable
    } else {
        Class::Boundary
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub mu2: f64,
    pub kappa_local: f64,
    pub empirical_ratios: Vec<(f64, f64)>,
    pub scaling_ratios: Vec<(f64, f64)>,
    pub dilation_ratios: Vec<(f64, f64)>,
    pub nu1: f64,
    pub classification: Class,
}

/// `‖w‖*² = ω⟨(Λ₀ + C)w, w⟩`.
pub fn star_norm_sq(op: &ChannelOp, c: f64, w: &[f64]) -> f64 {
    sphere_area(op.order.n) * dot(&op.grid(), &op.apply(w, c), w)
}

/// `‖w‖*² - Λ̃ ‖w|x|^{-t}‖²_{Lp}` for a radial profile.
pub fn deficit(op: &ChannelOp, c: f64, w: &[f64], params: &Params, quotient: f64) -> f64 {
    let om = sphere_area(op.order.n);
    let lp = om * op.grid().h() * w.iter().map(|x| x.abs().powf(params.p)).sum::<f64>();
    star_norm_sq(op, c, w) - quotient * lp.powf(2.0 / params.p)
}

pub const STABILITY_EPS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Local stability constant `1 - (p-1)/μ₂` and its empirical counterpart
/// along the `μ₂` eigendirection and the two manifold directions.
pub fn stability_kappa(res: &MinimizerResult) -> Result<StabilityReport> {
    let pm1 = res.params.p - 1.0;
    let radial = channel_spectrum(res, 0, 5)?;
    let idx = radial
        .eigenvalues
        .iter()
        .position(|m| *m > pm1 + MARGIN)
        .ok_or(Error::Eigen { worst: f64::NAN })?;
    let mu2 = radial.eigenvalues[idx];
    let kappa_local = 1.0 - pm1 / mu2;
    let op = ChannelOp::new(res.profile.grid, &res.profile.order, 0)?;
    let c = res.coeff;
    let v = &res.profile.values;
    let w_star = star_norm_sq(&op, c, v);
    let ratios = |dir: &[f64]| -> Vec<(f64, f64)> {
        let scale = (w_star / star_norm_sq(&op, c, dir)).sqrt();
        let g: Vec<f64> = dir.iter().map(|x| x * scale).collect();
        STABILITY_EPS
            .iter()
            .map(|&eps| {
                let w: Vec<f64> = v.iter().zip(&g).map(|(a, b)| a + eps * b).collect();
                let eg: Vec<f64> = g.iter().map(|x| eps * x).collect();
                (eps, deficit(&op, c, &w, &res.params, res.quotient) / star_norm_sq(&op, c, &eg))
            })
            .collect()
    };
    let empirical_ratios = ratios(&radial.eigenvectors[idx].values);
    let scaling_ratios = ratios(v);
    let dilation_ratios = ratios(&dilation_mode(&res.profile).values);
    let nu1 = channel_spectrum(res, 1, 1)?.eigenvalues[0];
    Ok(StabilityReport { mu2, kappa_local, empirical_ratios, scaling_ratios, dilation_ratios, nu1, classification: classify(nu1, res.params.p) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartRow {
    pub alpha: f64,
    pub p: f64,
    pub quotient: Option<f64>,
    pub nu1: Option<f64>,
    pub mu2: Option<f64>,
    pub class: String,
}

impl ChartRow {
    pub fn failed(alpha: f64, p: f64, class: &str) -> Self {
        Self { alpha, p, quotient: None, nu1: None, mu2: None, class: class.to_string() }
    }
}

/// One chart point: solve, then bottom of channel 1 and second radial eigenvalue.
pub fn chart_point(order: &Order, alpha: f64, p: f64, opts: &SolveOpts) -> ChartRow {
    let params = match Params::new(order.n, order.s, p, alpha) {
        Ok(x) => x,
        Err(_) => return ChartRow::failed(alpha, p, "invalid-params"),
    };
    let run = || -> Result<ChartRow> {
        let grid = crate::solver::default_grid(&params)?;
        let res = solve_ground_state(&params, grid, opts)?;
        let nu1 = channel_spectrum(&res, 1, 1)?.eigenvalues[0];
        let radial = channel_spectrum(&res, 0, 4)?;
        let mu2 = radial.eigenvalues.iter().copied().find(|m| *m > p - 1.0 + MARGIN);
        Ok(ChartRow { alpha, p, quotient: Some(res.quotient), nu1: Some(nu1), mu2, class: classify(nu1, p).label().to_string() })
    };
    run().unwrap_or_else(|_| ChartRow::failed(alpha, p, "failed"))
}

#[derive(Debug, Clone, Serialize)]
pub struct Chart {
    pub rows: Vec<ChartRow>,
    /// (α, p) where `ν₁ = p-1`, interpolated along each α row.
    pub boundary: Vec<(f64, f64)>,
}

/// Classification over an (α, p) grid, rows ordered by (α index, p index).
pub fn symmetry_chart(order: &Order, alphas: &[f64], ps: &[f64], opts: &SolveOpts) -> Chart {
    let points: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| ps.iter().map(move |&p| (a, p))).collect();
    let rows: Vec<ChartRow> = points.par_iter().map(|&(a, p)| chart_point(order, a, p, opts)).collect();
    Chart { boundary: boundary_curve(&rows, ps.len()), rows }
}

pub fn boundary_curve(rows: &[ChartRow], per_alpha: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if per_alpha == 0 {
        return out;
    }
    for chunk in rows.chunks(per_alpha) {
        for w in chunk.windows(2) {
            if let (Some(n0), Some(n1)) = (w[0].nu1, w[1].nu1) {
                let g0 = n0 - (w[0].p - 1.0);
                let g1 = n1 - (w[1].p - 1.0);
                if g0 * g1 < 0.0 {
                    let t = g0 / (g0 - g1);
                    out.push((w[0].alpha, w[0].p + t * (w[1].p - w[0].p)));
                }
            }
        }
    }
    out
}
