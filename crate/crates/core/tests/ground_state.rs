use fckn::coeffs::coeff_quadrature;
use fckn::cylcore::{from_cylinder, CylGrid, CylProfile};
use fckn::solver::*;
use fckn::specfun::hardy_constant;
use fckn::{Order, Params};

fn solve(n: u32, s: f64, p: f64, alpha: f64) -> MinimizerResult {
    let pr = Params::new(n, s, p, alpha).unwrap();
    let grid = default_grid(&pr).unwrap();
    solve_ground_state(&pr, grid, &SolveOpts::default()).unwrap()
}

#[test]
fn constant_fixed_point_is_exact() {
    let pr = Params::new(3, 0.5, 2.5, 0.0).unwrap();
    let grid = CylGrid::new(20.0, 1024).unwrap();
    let opts = SolveOpts { init: Init::Constant, allow_nondecaying: true, ..SolveOpts::default() };
    let r = solve_ground_state(&pr, grid, &opts).unwrap();
    assert_eq!(r.iterations, 0);
    assert!(r.el_residual <= 1e-12, "{}", r.el_residual);
    let v_star = (2.0 / std::f64::consts::PI).powf(2.0);
    assert!((constant_solution(&pr).unwrap() - v_star).abs() < 1e-14);
    let (scale, _) = normalize_to_el(&r.profile, &pr).unwrap();
    assert!((scale - 1.0).abs() < 1e-12);
    assert_eq!(center_and_check_even(&r.profile), 0.0);
    assert!(dilation_mode(&r.profile).values.iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn ground_state_diagnostics() {
    for alpha in [0.0, 0.3] {
        let r = solve(3, 0.5, 2.5, alpha);
        let theta = 1.0 - alpha;
        assert!(r.el_residual <= 1e-8);
        let lp = lp_normalization(&r);
        assert!((lp - r.quotient).abs() <= 1e-8 * r.quotient, "{lp} vs {}", r.quotient);
        assert!(((r.slopes.0 - theta) / theta).abs() <= 0.02, "{:?}", r.slopes);
        assert!(((r.slopes.1 + theta) / theta).abs() <= 0.02, "{:?}", r.slopes);
        assert!(!r.slope_warning);
        assert!(center_and_check_even(&r.profile) <= 1e-6);
        let w = from_cylinder(&r.profile);
        assert!(w.windows(2).all(|p| p[1].1 < p[0].1));
        // normalization is a fixed point of the rescaling
        let (scale, _) = normalize_to_el(&r.profile, &r.params).unwrap();
        assert!((scale - 1.0).abs() < 1e-10);
        let doubled = r.profile.with_values(r.profile.values.iter().map(|x| 2.0 * x).collect());
        let (half, _) = normalize_to_el(&doubled, &r.params).unwrap();
        assert!((half - 0.5).abs() < 1e-10);
        // iterates stay clamp-free at the end
        assert!(r.clamps.iter().rev().take(10).all(|c| *c == 0));
    }
}

#[test]
fn quotient_above_linear_limit_near_two() {
    let o = Order::new(3, 0.5).unwrap();
    let lim = hardy_constant(&o) + coeff_quadrature(&o, -0.2).unwrap();
    let r = solve(3, 0.5, 2.05, -0.2);
    assert!(r.quotient > lim, "{} <= {lim}", r.quotient);
    assert!(r.quotient < 1.2 * lim);
    assert!(r.radial_constrained);
}

#[test]
fn slope_fit_recovers_synthetic_rate() {
    let o = Order::new(3, 0.5).unwrap();
    let pr = Params::new(3, 0.5, 2.5, 0.0).unwrap();
    let grid = CylGrid::new(20.0, 1024).unwrap();
    let theta = 0.8;
    let v: Vec<f64> = grid.nodes().iter().map(|t| 1.0 / (theta * t).cosh()).collect();
    let prof = CylProfile::new(grid, v, o, Some(pr)).unwrap();
    let mut r = solve_ground_state(&pr, grid, &SolveOpts { init: Init::Constant, allow_nondecaying: true, ..SolveOpts::default() }).unwrap();
    r.profile = prof;
    r.center = peak_location(&r.profile);
    let ((a, b), _) = decay_slopes(&r).unwrap();
    assert!((a - theta).abs() < 1e-3 && (b + theta).abs() < 1e-3, "{a} {b}");
    // a shifted even profile centres back to zero defect
    let shifted = r.profile.with_values(grid.nodes().iter().map(|t| (-(t - 0.3) * (t - 0.3)).exp()).collect());
    assert!(center_and_check_even(&shifted) <= 1e-10);
}

#[test]
fn bound_table_over_shrinking_p() {
    let fam: Vec<MinimizerResult> = [2.4, 2.3, 2.2, 2.1, 2.05].iter().map(|&p| solve(3, 0.5, p, -0.3)).collect();
    let t = uniform_bound_check(&fam).unwrap();
    assert_eq!(t.rows.len(), 5);
    assert!(t.c.is_finite() && t.c > 0.0);
    assert!(t.rows.iter().all(|r| r.ratio <= t.c * (1.0 + 1e-12)));
    let one = uniform_bound_check(&fam[..1]).unwrap();
    assert_eq!(one.rows.len(), 1);
}
