//! Numbered acceptance criteria as library checks, shared by the `verify`
//! command and the acceptance test binary.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::coeffs::{coeff, coeff_quadrature};
use crate::cylcore::{apply_channel_operator, from_cylinder, CylGrid, CylProfile};
use crate::error::Result;
use crate::ineqlab::*;
use crate::kernel::radial_pv;
use crate::solver::*;
use crate::spectral::*;
use crate::specfun::{channel_symbol, hardy_constant, Order, Params};
use crate::supersol::{certify, default_radii, CERT_NODES};
use crate::sweep::{chart_csv, run_sweep, Cache, SweepSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub seconds: f64,
    pub detail: Value,
}

pub const CRITERIA: [(u32, &str); 13] = [
    (1, "multiplier fidelity"),
    (2, "weight coefficient"),
    (3, "exact fixed point"),
    (4, "ground state"),
    (5, "non-degeneracy spectrum"),
    (6, "p -> 2 limit"),
    (7, "general Hardy-type inequality"),
    (8, "fractional integration by parts"),
    (9, "second variation"),
    (10, "stability constant"),
    (11, "smoothed fundamental solution"),
    (12, "symmetry chart"),
    (13, "determinism"),
];

fn solve(n: u32, s: f64, p: f64, alpha: f64) -> Result<MinimizerResult> {
    let pr = Params::new(n, s, p, alpha)?;
    solve_ground_state(&pr, default_grid(&pr)?, &SolveOpts::default())
}

fn gauss(sigma: f64, shift: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| (-(t - shift) * (t - shift) / (2.0 * sigma * sigma)).exp()
}

pub fn multiplier_fidelity() -> Result<(bool, Value)> {
    let grid = CylGrid::new(30.0, 2048)?;
    let mut worst_all: f64 = 0.0;
    let mut cases = Vec::new();
    // s = 1/2 is outside the window for n = 1
    for (n, s) in [(1, 0.25), (3, 0.25), (3, 0.5)] {
        let o = Order::new(n, s)?;
        for ell in [0, 1] {
            let v = gauss(1.5, 0.3);
            let prof = CylProfile::new(grid, grid.nodes().into_iter().map(&v).collect(), o, None)?;
            let out = apply_channel_operator(&prof, ell, false)?;
            let pv = radial_pv(&o, ell)?;
            let g = o.half_gap();
            let f = |r: f64| r.powf(-g) * v(r.ln());
            let mut worst: f64 = 0.0;
            for i in (grid.n / 2 - 100..grid.n / 2 + 100).step_by(20) {
                let r = grid.tau(i).exp();
                let direct = r.powf((o.nf() + 2.0 * s) / 2.0) * pv.frac_lap(f, r).value;
                worst = worst.max((direct - out.values[i]).abs() / direct.abs());
            }
            worst_all = worst_all.max(worst);
            cases.push(json!({"n": n, "s": s, "ell": ell, "rel_err": worst}));
        }
    }
    let o = Order::new(3, 0.5)?;
    let d0 = (channel_symbol(&o, 0)?.eval(0.0) - 2.0 / PI).abs();
    let d1 = (channel_symbol(&o, 1)?.eval(0.0) - PI / 2.0).abs();
    let pass = worst_all <= 1e-6 && d0 <= 1e-10 && d1 <= 1e-10;
    Ok((pass, json!({"cases": cases, "max_rel_err": worst_all, "lambda0_at_0_err": d0, "lambda1_at_0_err": d1})))
}

fn window_alphas(o: &Order, k: usize) -> Vec<f64> {
    let (lo, hi) = (-2.0 * o.s, o.half_gap());
    (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect()
}

pub fn weight_coefficient() -> Result<(bool, Value)> {
    let mut pass = true;
    let mut rows = Vec::new();
    for (n, s) in [(3, 0.5), (1, 0.25)] {
        let o = Order::new(n, s)?;
        let mut route_gap: f64 = 0.0;
        for a in window_alphas(&o, 10) {
            let r = coeff(&o, a)?;
            route_gap = route_gap.max(r.est_error / r.value.abs().max(1.0));
        }
        let c0 = coeff_quadrature(&o, 0.0)?.abs();
        let grid = window_alphas(&o, 50);
        let vals = grid.iter().map(|&a| coeff_quadrature(&o, a)).collect::<Result<Vec<f64>>>()?;
        let signs = grid.iter().zip(&vals).all(|(a, c)| {
            if a.abs() <= 1e-12 {
                c.abs() <= 1e-8
            } else if *a < 0.0 {
                *c > 0.0
            } else {
                *c < 0.0
            }
        });
        let monotone = vals.windows(2).all(|w| w[0] > w[1]);
        let ch = hardy_constant(&o);
        let above_hardy = vals.iter().all(|c| *c > -ch);
        let ok = route_gap <= 1e-6 && c0 <= 1e-8 && signs && monotone && above_hardy;
        pass &= ok;
        rows.push(json!({"n": n, "s": s, "route_gap": route_gap, "c_at_0": c0, "sign_pattern": signs,
            "strictly_decreasing": monotone, "min_c_plus_hardy": vals.iter().fold(f64::INFINITY, |m, c| m.min(c + ch))}));
    }
    Ok((pass, json!({ "orders": rows })))
}

pub fn exact_fixed_point() -> Result<(bool, Value)> {
    let pr = Params::new(3, 0.5, 2.5, 0.0)?;
    let opts = SolveOpts { init: Init::Constant, allow_nondecaying: true, ..SolveOpts::default() };
    let r = solve_ground_state(&pr, CylGrid::new(20.0, 1024)?, &opts)?;
    Ok((r.el_residual <= 1e-12, json!({"el_residual": r.el_residual, "iterations": r.iterations})))
}

pub fn ground_state() -> Result<(bool, Value)> {
    let mut pass = true;
    let mut rows = Vec::new();
    for alpha in [0.0, 0.3] {
        let r = solve(3, 0.5, 2.5, alpha)?;
        let theta = 1.0 - alpha;
        let norm = (lp_normalization(&r) - r.quotient).abs() / r.quotient;
        let slope_err = ((r.slopes.0 - theta) / theta).abs().max(((r.slopes.1 + theta) / theta).abs());
        let even = center_and_check_even(&r.profile);
        let w = from_cylinder(&r.profile);
        let decreasing = w.windows(2).all(|p| p[1].1 < p[0].1);
        let ok = r.el_residual <= 1e-8 && norm <= 1e-8 && slope_err <= 0.02 && even <= 1e-6 && decreasing;
        pass &= ok;
        rows.push(json!({"alpha": alpha, "el_residual": r.el_residual, "normalization_gap": norm,
            "slopes": [r.slopes.0, r.slopes.1], "slope_rel_err": slope_err, "evenness_defect": even, "decreasing": decreasing}));
    }
    Ok((pass, json!({ "points": rows })))
}

pub fn nondegeneracy() -> Result<(bool, Value)> {
    let mut pass = true;
    let mut rows = Vec::new();
    for (alpha, p) in [(0.0, 2.5), (0.3, 2.5), (0.4, 2.2)] {
        let r = solve(3, 0.5, p, alpha)?;
        let rep = verify_nondegeneracy(&r)?;
        let st = stability_kappa(&r)?;
        let pm1 = p - 1.0;
        let ok = (rep.mu0 - 1.0).abs() <= 1e-6
            && rep.ground_similarity >= 1.0 - 1e-6
            && (rep.mu1 - pm1).abs() <= 1e-4
            && rep.dilation_similarity >= 1.0 - 1e-6
            && st.mu2 - pm1 > 0.0
            && st.nu1 - pm1 > 0.0;
        pass &= ok;
        rows.push(json!({"alpha": alpha, "p": p, "mu0": rep.mu0, "mu1": rep.mu1, "mu2": st.mu2, "nu1": st.nu1,
            "ground_similarity": rep.ground_similarity, "dilation_similarity": rep.dilation_similarity}));
    }
    Ok((pass, json!({ "points": rows })))
}

/// Value at x = 0 of the quadratic through three points.
fn extrapolate(pts: &[(f64, f64)]) -> f64 {
    let [(x0, y0), (x1, y1), (x2, y2)] = [pts[0], pts[1], pts[2]];
    y0 * x1 * x2 / ((x0 - x1) * (x0 - x2)) + y1 * x0 * x2 / ((x1 - x0) * (x1 - x2)) + y2 * x0 * x1 / ((x2 - x0) * (x2 - x1))
}

pub fn p_to_two_limit() -> Result<(bool, Value)> {
    let o = Order::new(3, 0.5)?;
    let mut pass = true;
    let mut rows = Vec::new();
    for alpha in [-0.3, -0.1] {
        let target = hardy_constant(&o) + coeff_quadrature(&o, alpha)?;
        let mut pts = Vec::new();
        for p in [2.2, 2.1, 2.05, 2.02] {
            pts.push((p - 2.0, solve(3, 0.5, p, alpha)?.quotient));
        }
        let limit = extrapolate(&pts[1..]);
        let rel = (limit / target - 1.0).abs();
        pass &= rel <= 0.02;
        rows.push(json!({"alpha": alpha, "quotients": pts, "extrapolated": limit, "target": target, "rel_err": rel}));
    }
    Ok((pass, json!({ "rows": rows })))
}

pub fn hardy_inequality() -> Result<(bool, Value)> {
    let o = Order::new(3, 0.5)?;
    let gs = solve(3, 0.5, 2.5, 0.3)?;
    let bubble = bubble_profile(&o, bubble_grid(&o)?)?;
    let mut pass = true;
    let mut bases = Vec::new();
    for (name, prof) in [("ckn-ground-state", &gs.profile), ("sobolev-bubble", &bubble)] {
        let rho = rho_profile(prof)?;
        let (mut trials, mut failures, mut skipped, mut min_def) = (0, 0, 0, f64::INFINITY);
        for ell in [1, 2] {
            for seed in 1..=16 {
                let rep = hardy_trials(&rho, ell, seed, 64)?;
                trials += rep.trials;
                skipped += rep.skipped;
                failures += rep.failures;
                min_def = min_def.min(rep.min_deficit);
            }
        }
        pass &= failures == 0 && trials > 0;
        bases.push(json!({"base": name, "trials": trials, "skipped": skipped, "failures": failures, "min_deficit": min_def}));
    }
    let mut ortho = Vec::new();
    for (n, s) in [(3, 0.5), (1, 0.25)] {
        let rep = orthogonality_necessity(&Order::new(n, s)?)?;
        pass &= (rep.ratio - rep.expected).abs() <= 1e-3;
        ortho.push(json!({"n": n, "s": s, "ratio": rep.ratio, "expected": rep.expected}));
    }
    Ok((pass, json!({"bases": bases, "orthogonality_necessity": ortho})))
}

pub fn integration_by_parts() -> Result<(bool, Value)> {
    let corpus = ibp_corpus();
    let mut worst: f64 = 0.0;
    for c in &corpus {
        worst = worst.max(frac_ibp_check(c)?.gap);
    }
    Ok((corpus.len() == 20 && worst <= 1e-4, json!({"cases": corpus.len(), "max_gap": worst})))
}

pub fn second_variation() -> Result<(bool, Value)> {
    let rep = hessian_trials(&solve(3, 0.5, 2.5, 0.0)?, 21, 100)?;
    Ok((rep.trials == 100 && rep.min_deficit >= -1e-8, serde_json::to_value(&rep)?))
}

pub fn weak_norm_checks() -> Result<(bool, Value)> {
    let pr = Params::new(3, 0.5, 2.5, 0.3)?;
    let g0 = default_grid(&pr)?;
    let opts = SolveOpts { auto_extend: false, ..SolveOpts::default() };
    let gs = solve_ground_state(&pr, CylGrid::new(g0.l + 10.0, 2 * g0.n)?, &opts)?;
    let (dec, shell) = rearranged_pair(&gs.profile.order, gs.profile.grid, 1.0)?;
    let base = remainder_ratio(&gs, &dec, 1.0)?;
    let h = gs.profile.grid.h();
    let mut drift: f64 = 0.0;
    for k in [50usize, 120] {
        let moved = remainder_ratio(&gs, &shift_nodes(&dec, k), (-(k as f64) * h).exp())?;
        drift = drift.max((moved.ratio / base.ratio - 1.0).abs());
    }
    let other = remainder_ratio(&gs, &shell, 1.0)?;
    let family: Vec<_> = [1.0, 3.0, 6.0].iter().map(|l| (cutoff_dilate(&gs, (l / h).round() as usize, 1.0), 1.0)).collect();
    let rep = remainder_check(&gs, &family)?;
    let vals = radial_values(&dec);
    let m = crate::ineqlab::cell_measures(&dec.grid, &dec.order);
    let q = 3.0 / (3.0 - 1.0 - 0.3);
    let hom = (weak_norm(&vals.iter().map(|x| 2.5 * x).collect::<Vec<_>>(), &m, q) / weak_norm(&vals, &m, q) - 2.5).abs();
    let pass = drift <= 1e-6 && base.ratio <= other.ratio && rep.pass && hom <= 1e-12;
    Ok((pass, json!({"dilation_drift": drift, "decreasing_ratio": base.ratio, "rearranged_ratio": other.ratio,
        "family_infimum": rep.infimum, "homogeneity_defect": hom})))
}

pub fn stability_constant() -> Result<(bool, Value)> {
    let rep = stability_kappa(&solve(3, 0.5, 2.5, 0.0)?)?;
    let at = |v: &[(f64, f64)]| v.iter().find(|(e, _)| *e == 1e-3).map(|x| x.1).unwrap_or(f64::NAN);
    let emp = at(&rep.empirical_ratios);
    let rel = (emp / rep.kappa_local - 1.0).abs();
    let (sc, dl) = (at(&rep.scaling_ratios), at(&rep.dilation_ratios));
    let pass = rel <= 0.05 && sc.abs() < 1e-2 && dl.abs() < 1e-2;
    Ok((pass, json!({"kappa_local": rep.kappa_local, "ratio": emp, "rel_err": rel, "scaling_ratio": sc, "dilation_ratio": dl, "mu2": rep.mu2})))
}

pub fn smoothed_fundamental_solution() -> Result<(bool, Value)> {
    let mut pass = true;
    let mut rows = Vec::new();
    for (n, s) in [(1, 0.25), (3, 0.5)] {
        let r = certify(&Order::new(n, s)?, CERT_NODES, &default_radii(120))?;
        pass &= r.pass;
        rows.push(json!({"n": n, "s": s, "pass": r.pass, "kappa": r.kappa.kappa, "mass": r.field.total_mass,
            "positivity_min": r.field.positivity_min, "ordering_min": r.ordering_min, "scaling_ratios": r.scaling.ratios,
            "mean_value_min_gaps": r.mean_value.iter().map(|m| m.min_gap).collect::<Vec<_>>(), "control_detected": r.control_detected}));
    }
    Ok((pass, json!({ "orders": rows })))
}

pub const CHART_ALPHAS: [f64; 6] = [-0.9, -0.8, -0.4, -0.2, 0.0, 0.3];
pub const CHART_PS: [f64; 6] = [2.05, 2.1, 2.3, 2.5, 2.7, 2.9];

pub fn symmetry_chart_check(jobs: usize) -> Result<(bool, Value)> {
    let spec = SweepSpec {
        order: Order::new(3, 0.5)?,
        alphas: CHART_ALPHAS.to_vec(),
        ps: CHART_PS.to_vec(),
        opts: SolveOpts::default(),
        grid: None,
        seed: 0,
        jobs,
    };
    let rows = run_sweep(&spec, None, None)?.finished_rows();
    let stable = |r: &ChartRow| r.class == "radial-stable";
    let nonneg = rows.iter().filter(|r| r.alpha >= 0.0).all(stable);
    let near_two = rows.iter().filter(|r| r.alpha > -0.5 && r.alpha < 0.0 && r.p <= 2.1).all(stable);
    let unstable = rows.iter().filter(|r| r.alpha <= -0.8 && r.class == "channel-1-unstable").count();
    let pass = nonneg && near_two && unstable >= 1;
    Ok((pass, json!({"nonnegative_alpha_stable": nonneg, "near_two_stable": near_two, "unstable_points": unstable,
        "boundary": boundary_curve(&rows, CHART_PS.len()), "csv": chart_csv(&rows)})))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    std::env::temp_dir().join(format!("fckn-{tag}-{}-{nanos}", std::process::id()))
}

pub fn determinism(jobs: usize) -> Result<(bool, Value)> {
    let spec = SweepSpec {
        order: Order::new(3, 0.5)?,
        alphas: vec![-0.2, 0.0, 0.3],
        ps: vec![2.3, 2.5],
        opts: SolveOpts::default(),
        grid: None,
        seed: 5,
        jobs,
    };
    let a = chart_csv(&run_sweep(&spec, None, None)?.finished_rows());
    let b = chart_csv(&run_sweep(&SweepSpec { jobs: 1, ..spec.clone() }, None, None)?.finished_rows());
    let dir = scratch_dir("resume");
    let cache = Cache::new(&dir);
    let first = run_sweep(&spec, Some(&cache), Some(2))?;
    let resumed = run_sweep(&spec, Some(&cache), None)?;
    let c = chart_csv(&resumed.finished_rows());
    let _ = std::fs::remove_dir_all(&dir);
    let o = Order::new(3, 0.5)?;
    let rho = rho_profile(&bubble_profile(&o, bubble_grid(&o)?)?)?;
    let t1 = serde_json::to_string(&hardy_trials(&rho, 1, 9, 64)?)?;
    let t2 = serde_json::to_string(&hardy_trials(&rho, 1, 9, 64)?)?;
    let pass = a == b && a == c && !first.complete() && resumed.cached == 2 && t1 == t2;
    Ok((pass, json!({"rerun_identical": a == b, "resume_identical": a == c, "resumed_from_cache": resumed.cached, "trials_identical": t1 == t2})))
}

/// Runs one criterion; compute errors count as failures with the message in `detail`.
pub fn run(id: u32, jobs: usize) -> Criterion {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let t0 = Instant::now();
    let out = match id {
        1 => multiplier_fidelity(),
        2 => weight_coefficient(),
        3 => exact_fixed_point(),
        4 => ground_state(),
        5 => nondegeneracy(),
        6 => p_to_two_limit(),
        7 => hardy_inequality(),
        8 => integration_by_parts(),
        9 => second_variation(),
        10 => stability_constant(),
        11 => smoothed_fundamental_solution(),
        12 => symmetry_chart_check(jobs),
        13 => determinism(jobs),
        _ => Ok((false, json!({"error": format!("no criterion {id}")}))),
    };
    let (pass, detail) = out.unwrap_or_else(|e| (false, json!({ "error": e.to_string() })));
    Criterion { id, name, pass, seconds: t0.elapsed().as_secs_f64(), detail }
}
