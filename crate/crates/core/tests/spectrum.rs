use fckn::cylcore::CylGrid;
use fckn::solver::*;
use fckn::spectral::*;
use fckn::Params;

fn solve_on(pr: &Params, grid: CylGrid) -> MinimizerResult {
    solve_ground_state(pr, grid, &SolveOpts { auto_extend: false, ..SolveOpts::default() }).unwrap()
}

fn solve(n: u32, s: f64, p: f64, alpha: f64) -> MinimizerResult {
    let pr = Params::new(n, s, p, alpha).unwrap();
    solve_ground_state(&pr, default_grid(&pr).unwrap(), &SolveOpts::default()).unwrap()
}

#[test]
fn radial_eigenpairs_match_exact_values() {
    for (n, s, p, a) in [(3, 0.5, 2.5, 0.0), (3, 0.5, 2.5, 0.3), (1, 0.25, 2.5, 0.0)] {
        let r = solve(n, s, p, a);
        let rep = channel_spectrum(&r, 0, 4).unwrap();
        assert!((rep.eigenvalues[0] - 1.0).abs() <= 1e-6, "{:?}", rep.eigenvalues);
        assert!((rep.eigenvalues[1] - (p - 1.0)).abs() <= 1e-4, "{:?}", rep.eigenvalues);
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] < w[1]));
        assert!(rep.eigenvalues.iter().all(|m| *m > 0.0));
        assert!(rep.residuals.iter().all(|x| *x <= 1e-8));
        assert!(rep.ortho_defect <= 1e-8, "{}", rep.ortho_defect);
        for (m, q) in rep.eigenvalues.iter().zip(&rep.rayleigh) {
            assert!((m - q).abs() <= 1e-10 * m, "{m} vs {q}");
        }
        assert!(cosine(&rep.eigenvectors[0].values, &r.profile.values) >= 1.0 - 1e-6);
        assert!(cosine(&rep.eigenvectors[1].values, &dilation_mode(&r.profile).values) >= 1.0 - 1e-6);
    }
}

#[test]
fn nondegenerate_at_nonnegative_alpha() {
    for (a, p) in [(0.0, 2.5), (0.4, 2.2)] {
        let r = solve(3, 0.5, p, a);
        let rep = verify_nondegeneracy(&r).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.ground_similarity >= 1.0 - 1e-6);
        assert!(rep.dilation_similarity >= 1.0 - 1e-6);
        assert_eq!(rep.margins.len(), 4);
        assert!(rep.margins.iter().all(|m| m.margin > 1e-2), "{:?}", rep.margins);
        // channel 1 sits above p - 1
        assert!(rep.margins[1].nearest > p - 1.0);
    }
}

#[test]
fn scaled_profile_fails_normalization() {
    let mut r = solve(3, 0.5, 2.5, 0.0);
    r.profile.values.iter_mut().for_each(|x| *x *= 1.1);
    let rep = verify_nondegeneracy(&r).unwrap();
    assert!(!rep.normalization_ok);
    assert!(!rep.pass);
    assert!((rep.mu0 - 1.1f64.powf(-0.5)).abs() < 1e-6, "{}", rep.mu0);
}

#[test]
fn bottom_eigenvalue_grows_with_channel() {
    let r = solve(3, 0.5, 2.5, 0.0);
    let bottoms: Vec<f64> = (0..4).map(|l| channel_spectrum(&r, l, 1).unwrap().eigenvalues[0]).collect();
    assert!(bottoms.windows(2).all(|w| w[0] <= w[1]), "{bottoms:?}");
}

#[test]
fn eigenvalues_stable_under_refinement() {
    let pr = Params::new(3, 0.5, 2.5, 0.0).unwrap();
    let g = default_grid(&pr).unwrap();
    let pick = |r: &MinimizerResult| {
        let e = channel_spectrum(r, 0, 3).unwrap().eigenvalues;
        [e[0], e[1], e[2], channel_spectrum(r, 1, 1).unwrap().eigenvalues[0]]
    };
    let base = pick(&solve_on(&pr, g));
    let fine = pick(&solve_on(&pr, CylGrid::new(g.l, 2 * g.n).unwrap()));
    let wide = pick(&solve_on(&pr, CylGrid::new(g.l + 10.0, g.n).unwrap()));
    for k in 0..4 {
        assert!((base[k] - fine[k]).abs() <= 1e-5, "{k}: {base:?} {fine:?}");
        assert!((base[k] - wide[k]).abs() <= 1e-5, "{k}: {base:?} {wide:?}");
    }
}

#[test]
fn stability_ratio_tracks_spectral_gap() {
    let r = solve(3, 0.5, 2.5, 0.0);
    let rep = stability_kappa(&r).unwrap();
    assert!(rep.kappa_local > 0.0 && rep.kappa_local < 1.0);
    assert!((rep.mu2 - 1.5 / (1.0 - rep.kappa_local)).abs() < 1e-12);
    let (eps, ratio) = rep.empirical_ratios[0];
    assert_eq!(eps, 1e-3);
    assert!((ratio / rep.kappa_local - 1.0).abs() <= 0.05, "{ratio} vs {}", rep.kappa_local);
    // approaches the local constant as ε shrinks
    let gaps: Vec<f64> = rep.empirical_ratios.iter().map(|(_, q)| (q - rep.kappa_local).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[0] < w[1]), "{gaps:?}");
    assert!(rep.scaling_ratios[0].1.abs() < 1e-2);
    assert!(rep.dilation_ratios[0].1.abs() < 1e-2);
    // second-order flat: the dilation ratio scales like ε²
    let d = &rep.dilation_ratios;
    assert!(d[1].1 / d[0].1 > 50.0 && d[2].1 / d[1].1 > 50.0, "{d:?}");
    assert_eq!(rep.classification, Class::RadialStable);
}

#[test]
fn boundary_curve_interpolates_sign_change() {
    let row = |alpha: f64, p: f64, nu1: f64| ChartRow { alpha, p, quotient: Some(1.0), nu1: Some(nu1), mu2: None, class: classify(nu1, p).label().into() };
    let rows = vec![row(-0.5, 2.2, 1.4), row(-0.5, 2.6, 1.4), row(0.0, 2.2, 2.0), row(0.0, 2.6, 2.0)];
    let b = boundary_curve(&rows, 2);
    assert_eq!(b.len(), 1);
    assert!((b[0].0 + 0.5).abs() < 1e-15 && (b[0].1 - 2.4).abs() < 1e-12);
    assert_eq!(classify(1.50005, 2.5), Class::Boundary);
    assert_eq!(rows[1].class, "channel-1-unstable");
}

#[test]
fn chart_marks_invalid_points() {
    let o = fckn::Order::new(3, 0.5).unwrap();
    let chart = symmetry_chart(&o, &[0.0], &[3.5], &SolveOpts::default());
    assert_eq!(chart.rows[0].class, "invalid-params");
}
