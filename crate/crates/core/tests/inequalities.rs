use fckn::cylcore::CylGrid;
use fckn::ineqlab::*;
use fckn::kernel::radial_pv;
use fckn::solver::*;
use fckn::{Order, Params};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ground_state(alpha: f64) -> MinimizerResult {
    let pr = Params::new(3, 0.5, 2.5, alpha).unwrap();
    solve_ground_state(&pr, default_grid(&pr).unwrap(), &SolveOpts::default()).unwrap()
}

#[test]
fn bubble_equation_by_quadrature() {
    for (n, s) in [(3, 0.5), (1, 0.25)] {
        let o = Order::new(n, s).unwrap();
        let pv = radial_pv(&o, 0).unwrap();
        let a = o.half_gap();
        let u = |r: f64| (1.0 + r * r).powf(-a);
        for r in [0.3, 1.0, 2.5] {
            let lhs = pv.frac_lap(u, r).value;
            let rhs = bubble_constant(&o) * u(r).powf(bubble_power(&o));
            assert!((lhs / rhs - 1.0).abs() < 1e-6, "({n},{s}) r={r}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn bubble_weight_matches_closed_form() {
    for (n, s) in [(3, 0.5), (1, 0.25)] {
        let o = Order::new(n, s).unwrap();
        let g = bubble_grid(&o).unwrap();
        let rho = rho_profile(&bubble_profile(&o, g).unwrap()).unwrap();
        assert_eq!(rho.nonmonotone, 0);
        let exact: Vec<f64> = g.nodes().iter().map(|t| bubble_rho_exact(&o, *t)).collect();
        let top = exact.iter().cloned().fold(0.0, f64::max);
        for i in (0..g.n).filter(|&i| rho.mask[i]) {
            assert!((rho.r[i] - exact[i]).abs() <= 1e-4 * top, "({n},{s}) τ={}: {} vs {}", g.tau(i), rho.r[i], exact[i]);
        }
    }
}

#[test]
fn ground_state_weight_is_nonnegative() {
    for alpha in [0.0, 0.3] {
        let rho = rho_profile(&ground_state(alpha).profile).unwrap();
        assert_eq!(rho.nonmonotone, 0);
        assert!(rho.valid() > 100);
        assert!(rho.r.iter().zip(&rho.mask).all(|(r, m)| !m || *r >= 0.0));
    }
}

#[test]
fn constant_profile_rejected() {
    let o = Order::new(3, 0.5).unwrap();
    let g = CylGrid::new(10.0, 256).unwrap();
    let p = fckn::cylcore::to_cylinder(|_| 1.0, g, o, None).unwrap();
    assert!(rho_profile(&p).is_err());
}

#[test]
fn hardy_trials_on_ground_state() {
    let rho = rho_profile(&ground_state(0.3).profile).unwrap();
    let rep = hardy_trials(&rho, 1, 11, 1000).unwrap();
    assert!(rep.trials > 800, "{rep:?}");
    assert_eq!(rep.failures, 0, "{rep:?}");
    assert!(rep.min_deficit >= -TRIAL_TOL);
    // identical g: channel 2 sits above channel 1
    let (lo, hi) = rho.window();
    for i in 0..20 {
        let g = random_bumps(&mut trial_rng(5, i), &rho.base.grid, lo + 8.0, hi - 8.0);
        assert!(hardy_trial(&rho, 2, &g).unwrap() > hardy_trial(&rho, 1, &g).unwrap());
    }
    assert!(hardy_trial(&rho, 0, &vec![0.0; rho.base.grid.n]).is_err());
}

#[test]
fn trials_are_reproducible() {
    let rho = rho_profile(&ground_state(0.0).profile).unwrap();
    let a = hardy_trials(&rho, 1, 3, 64).unwrap();
    let b = hardy_trials(&rho, 1, 3, 64).unwrap();
    assert_eq!(a.min_deficit.to_bits(), b.min_deficit.to_bits());
    assert_eq!((a.trials, a.skipped), (b.trials, b.skipped));
}

#[test]
fn orthogonality_cannot_be_dropped() {
    for (n, s, want) in [(3, 0.5, 2.0), (1, 0.25, 3.0)] {
        let o = Order::new(n, s).unwrap();
        let rep = orthogonality_necessity(&o).unwrap();
        assert_eq!(rep.expected, want);
        assert!((rep.ratio - want).abs() <= 1e-3, "({n},{s}): {}", rep.ratio);
    }
    // a channel-1 bump is fine against the same weight
    let o = Order::new(3, 0.5).unwrap();
    let g = bubble_grid(&o).unwrap();
    let rho = rho_profile(&bubble_profile(&o, g).unwrap()).unwrap();
    let bump: Vec<f64> = g.nodes().iter().map(|t| (-(t - 5.0) * (t - 5.0)).exp()).collect();
    assert!(hardy_trial(&rho, 1, &bump).unwrap() >= 0.0);
}

#[test]
fn fractional_product_rule() {
    let corpus = ibp_corpus();
    assert_eq!(corpus.len(), 20);
    for c in &corpus {
        let r = frac_ibp_check(c).unwrap();
        if c.f.bumps.is_empty() && c.f.poly.len() == 1 {
            assert!(r.gap <= 1e-8 && r.right == 0.0, "{r:?}");
        } else {
            assert!(r.gap <= 1e-4, "s={} {r:?}", c.s);
        }
        if c.g.bumps.iter().all(|b| b.amp >= 0.0) {
            assert!(r.right >= 0.0);
        }
    }
    let bad = IbpCase { s: 0.7, ..corpus[0].clone() };
    assert!(frac_ibp_check(&bad).is_err());
}

#[test]
fn weak_norm_of_indicator() {
    let u = vec![1.0; 4];
    let m = vec![0.25; 4];
    assert!((weak_norm(&u, &m, 2.0) - 1.0).abs() < 1e-15);
    assert!((weak_norm_averaged(&u, &m, 2.0) - 1.0).abs() < 1e-15);
}

#[test]
fn borderline_power_is_weak_but_not_strong() {
    // |x|^{-n/r} on log-spaced shells of B_R minus B_ε in n = 3
    let (n, r) = (3.0, 2.0);
    let om = 4.0 * std::f64::consts::PI;
    let mut weak = Vec::new();
    let mut strong = Vec::new();
    for k in [10.0, 20.0, 40.0] {
        let h = 0.01;
        let taus: Vec<f64> = (0..(k / h) as usize).map(|i| -k + (i as f64 + 0.5) * h).collect();
        let u: Vec<f64> = taus.iter().map(|t| (-n / r * t).exp()).collect();
        let m: Vec<f64> = taus.iter().map(|t| om * (n * t).exp() * h).collect();
        weak.push(weak_norm(&u, &m, r));
        strong.push(u.iter().zip(&m).map(|(u, m)| u.powf(r) * m).sum::<f64>().powf(1.0 / r));
    }
    assert!((weak[2] / weak[0] - 1.0).abs() < 1e-2, "{weak:?}");
    // ‖·‖_r^r grows linearly in the truncation depth
    let sq: Vec<f64> = strong.iter().map(|x| x * x).collect();
    assert!(((sq[2] - sq[1]) / (sq[1] - sq[0]) - 2.0).abs() < 1e-6, "{sq:?}");
}

#[test]
fn averaged_and_level_set_forms_compare() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let k = rng.random_range(5..60);
        let u: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let r = rng.random_range(1.2..5.0);
        let (a, b) = (weak_norm(&u, &m, r), weak_norm_averaged(&u, &m, r));
        assert!(b >= a * (1.0 - 1e-12) && b <= a * r / (r - 1.0) * (1.0 + 1e-12), "{a} {b} r={r}");
    }
}

proptest! {
    #[test]
    fn weak_norm_homogeneous_and_monotone(
        u in prop::collection::vec(-5.0f64..5.0, 1..40),
        c in 0.1f64..10.0,
        r in 1.1f64..6.0,
    ) {
        let m: Vec<f64> = (0..u.len()).map(|i| 0.1 + 0.01 * i as f64).collect();
        let base = weak_norm(&u, &m, r);
        let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
        prop_assert!((weak_norm(&scaled, &m, r) - c * base).abs() <= 1e-12 * (1.0 + c * base));
        let bigger: Vec<f64> = u.iter().map(|x| x.abs() + 0.5).collect();
        prop_assert!(weak_norm(&bigger, &m, r) >= base);
    }
}

#[test]
fn remainder_ratio_scaling_and_rearrangement() {
    let pr = Params::new(3, 0.5, 2.5, 0.3).unwrap();
    let g0 = default_grid(&pr).unwrap();
    let gs = solve_ground_state(&pr, CylGrid::new(g0.l + 10.0, 2 * g0.n).unwrap(), &SolveOpts { auto_extend: false, ..SolveOpts::default() }).unwrap();
    let (dec, shell) = rearranged_pair(&gs.profile.order, gs.profile.grid, 1.0).unwrap();
    let base = remainder_ratio(&gs, &dec, 1.0).unwrap();
    let h = gs.profile.grid.h();
    for k in [50usize, 120] {
        let moved = remainder_ratio(&gs, &shift_nodes(&dec, k), (-(k as f64) * h).exp()).unwrap();
        assert!((moved.ratio / base.ratio - 1.0).abs() <= 1e-6, "{moved:?} vs {base:?}");
    }
    let other = remainder_ratio(&gs, &shell, 1.0).unwrap();
    assert!((other.weak / base.weak - 1.0).abs() < 0.05);
    assert!(base.ratio <= other.ratio);
    // concentrating cutoffs of the ground state
    let family: Vec<_> = [1.0, 3.0, 6.0].iter().map(|l| (cutoff_dilate(&gs, (l / h).round() as usize, 1.0), 1.0)).collect();
    let rep = remainder_check(&gs, &family).unwrap();
    assert!(rep.pass);
    let last = rep.samples.last().unwrap().ratio;
    assert!(last >= 0.5 * rep.samples[0].ratio, "{:?}", rep.samples);
    let gs_neg = ground_state(-0.2);
    assert!(remainder_ratio(&gs_neg, &gs_neg.profile, 1.0).is_err());
}

#[test]
fn second_variation_nonnegative() {
    let rep = hessian_trials(&ground_state(0.3), 21, 100).unwrap();
    assert_eq!(rep.trials, 100);
    assert_eq!(rep.failures, 0, "{rep:?}");
    assert!(rep.min_deficit >= -1e-8);
}
