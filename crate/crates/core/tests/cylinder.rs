use fckn::coeffs::{coeff_quadrature, LogBump};
use fckn::cylcore::*;
use fckn::kernel::radial_pv;
use fckn::specfun::{channel_symbol, hardy_constant, riesz_constant, sphere_area};
use fckn::{Order, Params};
use proptest::prelude::*;

fn gauss(sigma: f64, shift: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| (-(t - shift) * (t - shift) / (2.0 * sigma * sigma)).exp()
}

#[test]
fn multiplier_matches_direct_quadrature() {
    let grid = CylGrid::new(30.0, 2048).unwrap();
    for (n, s) in [(1, 0.25), (3, 0.25), (3, 0.5)] {
        let o = Order::new(n, s).unwrap();
        for ell in [0, 1] {
            let v = gauss(1.5, 0.3);
            let prof = CylProfile::new(grid, grid.nodes().into_iter().map(&v).collect(), o, None).unwrap();
            let out = apply_channel_operator(&prof, ell, false).unwrap();
            let pv = radial_pv(&o, ell).unwrap();
            let g = o.half_gap();
            let f = |r: f64| r.powf(-g) * v(r.ln());
            let mut worst: f64 = 0.0;
            for i in (grid.n / 2 - 100..grid.n / 2 + 100).step_by(20) {
                let t = grid.tau(i);
                let r = t.exp();
                let direct = r.powf((o.nf() + 2.0 * s) / 2.0) * pv.frac_lap(f, r).value;
                worst = worst.max((direct - out.values[i]).abs() / direct.abs());
            }
            assert!(worst <= 1e-6, "n={n} s={s} ell={ell}: {worst:e}");
        }
    }
}

#[test]
fn constants_and_plane_waves_are_eigenvectors() {
    let o = Order::new(3, 0.5).unwrap();
    let pr = Params::new(3, 0.5, 2.5, -0.3).unwrap();
    let grid = CylGrid::new(20.0, 256).unwrap();
    let c = coeff_quadrature(&o, -0.3).unwrap();
    let op0 = ChannelOp::new(grid, &o, 0).unwrap();
    let ones = vec![1.7; grid.n];
    let out = op0.apply(&ones, c);
    let lam = hardy_constant(&o) + c;
    assert!(out.iter().all(|x| (x - 1.7 * lam).abs() < 1e-13));
    let _ = pr;
    let op1 = ChannelOp::new(grid, &o, 1).unwrap();
    let k = 7;
    let xi = std::f64::consts::PI * k as f64 / grid.l;
    let wave: Vec<f64> = grid.nodes().iter().map(|t| (xi * t).cos()).collect();
    let out = op1.apply(&wave, 0.0);
    let l1 = channel_symbol(&o, 1).unwrap().eval(xi);
    for (a, b) in out.iter().zip(&wave) {
        assert!((a - l1 * b).abs() < 1e-12);
    }
    // the spectral derivative of cos is exactly -ξ sin
    let d = Spectral::new(grid).derivative(&wave);
    for (t, dv) in grid.nodes().iter().zip(&d) {
        assert!((dv + xi * (xi * t).sin()).abs() < 1e-12);
    }
}

#[test]
fn round_trips() {
    let o = Order::new(3, 0.5).unwrap();
    let grid = CylGrid::new(20.0, 512).unwrap();
    let v: Vec<f64> = grid.nodes().into_iter().map(gauss(2.0, 0.0)).collect();
    let p = CylProfile::new(grid, v.clone(), o, None).unwrap();
    let w: Vec<f64> = from_cylinder(&p).into_iter().map(|(_, w)| w).collect();
    let back = samples_to_cylinder(&w, grid, o, None).unwrap();
    let err = back.values.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err <= 1e-15, "{err:e}");
    // W = r^{-α} becomes e^{((n-2s)/2 - α)τ}
    let q = to_cylinder(|r| r.powf(-0.3), grid, o, None).unwrap();
    for (t, x) in grid.nodes().iter().zip(&q.values) {
        assert!((x / ((1.0 - 0.3) * t).exp() - 1.0).abs() < 1e-12);
    }
    let sp = Spectral::new(grid);
    let inv = sp.inverse(&sp.forward(&v));
    assert!(inv.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn boundary_violation_suggests_larger_window() {
    let o = Order::new(3, 0.5).unwrap();
    let grid = CylGrid::new(10.0, 256).unwrap();
    let p = CylProfile::new(grid, vec![1.0; grid.n], o, None).unwrap();
    match apply_channel_operator(&p, 0, false) {
        Err(fckn::Error::BoundaryNotSmall { suggested_l, .. }) => assert_eq!(suggested_l, 20.0),
        other => panic!("{:?}", other.map(|_| ())),
    }
}

#[test]
fn plancherel_matches_direct_seminorm() {
    let o = Order::new(1, 0.25).unwrap();
    let pr = Params::new(1, 0.25, 2.5, 0.0).unwrap();
    let grid = CylGrid::new(40.0, 4096).unwrap();
    let bump = LogBump { center: 0.2, width: 0.7 };
    let p = to_cylinder(|r| bump.eval(r), grid, o, Some(pr)).unwrap();
    let q = quadratic_forms(&p, 0, &pr).unwrap();
    let direct = direct_seminorm_hs(|r| bump.eval(r), &o).unwrap().value;
    assert!((q.hs_part - direct).abs() <= 1e-4 * direct, "{} vs {direct}", q.hs_part);
    assert_eq!(q.star_norm_sq, q.hs_part);
}

#[test]
fn seminorm_scaling_and_zero() {
    let o = Order::new(3, 0.5).unwrap();
    let b = LogBump { center: 0.0, width: 0.5 };
    let one = direct_seminorm_hs(|r| b.eval(r), &o).unwrap().value;
    let two = direct_seminorm_hs(|r| b.eval(2.0 * r), &o).unwrap().value;
    let expect = 2f64.powf(2.0 * o.s - o.nf());
    assert!((two / one - expect).abs() <= 1e-6 * expect);
    assert_eq!(direct_seminorm_hs(|_| 0.0, &o).unwrap().value, 0.0);
    let c = riesz_constant(3, 0.5).unwrap();
    let ckn = direct_seminorm_ckn(|r| b.eval(r), &o, 0.0).unwrap().value;
    assert!((ckn - 2.0 / c * one).abs() <= 1e-6 * ckn);
}

#[test]
fn transform_identity() {
    let b = LogBump { center: 0.1, width: 0.5 };
    let o3 = Order::new(3, 0.5).unwrap();
    assert!(check_transform_identity(|r| b.eval(r), &o3, 0.0).unwrap() <= 1e-8);
    assert!(check_transform_identity(|r| b.eval(r), &o3, -0.5).unwrap() <= 1e-4);
    let o1 = Order::new(1, 0.25).unwrap();
    assert!(check_transform_identity(|r| b.eval(r), &o1, 0.1).unwrap() <= 1e-4);
}

#[test]
fn lp_weight_cancellation() {
    let o = Order::new(3, 0.5).unwrap();
    let grid = CylGrid::new(20.0, 512).unwrap();
    let om = sphere_area(3);
    for p in [2.2, 2.5, 2.9] {
        let pr = Params::new(3, 0.5, p, 0.2).unwrap();
        // W = r^{-(n-2s)/2} on a sub-window of 128 nodes: |W|^p r^{-tp} r^{n-1} dr is flat in τ
        let len = 128.0 * grid.h();
        let prof = to_cylinder(
            |r| {
                let i = ((r.ln() + grid.l) / grid.h()).round() as usize;
                if (200..328).contains(&i) { r.powf(-o.half_gap()) } else { 0.0 }
            },
            grid,
            o,
            Some(pr),
        )
        .unwrap();
        let q = quadratic_forms(&prof, 0, &pr).unwrap();
        assert!((q.lp_part - om * len).abs() <= 1e-12 * om * len, "{}", q.lp_part);
        assert!((q.hardy_part - om * len).abs() <= 1e-12 * om * len);
        assert!(q.star_norm_sq > 0.0);
    }
}

#[test]
fn bubble_quotient_approaches_sobolev_constant() {
    // at α = 0 the bubble's quotient rises monotonically to the sharp Sobolev
    // constant S = 4^s π^s Γ((n+2s)/2)/Γ((n-2s)/2) (Γ(n/2)/Γ(n))^{2s/n} as p → 2*
    use fckn::specfun::gamma;
    let o = Order::new(3, 0.5).unwrap();
    let (n, s) = (3.0, 0.5);
    let sob = 4f64.powf(s) * std::f64::consts::PI.powf(s) * gamma((n + 2.0 * s) / 2.0) / gamma((n - 2.0 * s) / 2.0)
        * (gamma(n / 2.0) / gamma(n)).powf(2.0 * s / n);
    let grid = CylGrid::new(60.0, 8192).unwrap();
    let mut last = 0.0;
    let mut gap = f64::INFINITY;
    for eps in [0.5, 0.2, 0.05, 0.01, 1e-4] {
        let pr = Params::new(3, 0.5, o.two_star() - eps, 0.0).unwrap();
        let prof = to_cylinder(|r| (1.0 + r * r).powf(-o.half_gap()), grid, o, Some(pr)).unwrap();
        let q = quadratic_forms(&prof, 0, &pr).unwrap().quotient;
        assert!(q > last && q < sob, "eps {eps}: {q}");
        let g = sob - q;
        assert!(g < gap);
        last = q;
        gap = g;
    }
    assert!(gap < 1e-3 * sob, "{gap}");
}

#[test]
fn profile_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let o = Order::new(3, 0.5).unwrap();
    let pr = Params::new(3, 0.5, 2.5, 0.1).unwrap();
    let grid = CylGrid::new(20.0, 128).unwrap();
    let v: Vec<f64> = grid.nodes().iter().map(|t| (1.0 / 3.0) * (-t * t).exp() + 1e-300).collect();
    let p = CylProfile::new(grid, v, o, Some(pr)).unwrap();
    write_profile(&path, &p, "test").unwrap();
    let (q, side) = read_profile(&path).unwrap();
    assert_eq!(q, p);
    assert_eq!(side.kind, "test");
}

fn random_vec(seed: u64, n: usize) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn self_adjoint_positive_translation_covariant(seed in any::<u64>(), ell in 0u32..3, shift in 1usize..200) {
        let o = Order::new(3, 0.5).unwrap();
        let grid = CylGrid::new(20.0, 256).unwrap();
        let c = coeff_quadrature(&o, -0.4).unwrap();
        let op = ChannelOp::new(grid, &o, ell).unwrap();
        let v = random_vec(seed, grid.n);
        let w = random_vec(seed ^ 0x9e37_79b9, grid.n);
        let av = op.apply(&v, c);
        let aw = op.apply(&w, c);
        let nv = dot(&grid, &v, &v).sqrt();
        let nw = dot(&grid, &w, &w).sqrt();
        prop_assert!((dot(&grid, &av, &w) - dot(&grid, &v, &aw)).abs() <= 1e-12 * nv * nw * 10.0);
        if ell == 0 {
            prop_assert!(dot(&grid, &av, &v) >= (hardy_constant(&o) + c) * nv * nv * (1.0 - 1e-12));
        }
        let rot: Vec<f64> = (0..grid.n).map(|i| v[(i + shift) % grid.n]).collect();
        let a_rot = op.apply(&rot, c);
        for i in 0..grid.n {
            prop_assert!((a_rot[i] - av[(i + shift) % grid.n]).abs() <= 1e-12 * nv * 10.0);
        }
    }
}
