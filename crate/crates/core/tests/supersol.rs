use std::sync::OnceLock;

use fckn::supersol::*;
use fckn::Order;
use proptest::prelude::*;

fn order(n: u32, s: f64) -> Order {
    Order::new(n, s).unwrap()
}

fn report(n: u32) -> &'static SupersolReport {
    static R1: OnceLock<SupersolReport> = OnceLock::new();
    static R3: OnceLock<SupersolReport> = OnceLock::new();
    let (cell, s) = if n == 1 { (&R1, 0.25) } else { (&R3, 0.5) };
    cell.get_or_init(|| certify(&order(n, s), CERT_NODES, &default_radii(120)).unwrap())
}

fn profile(n: u32, s: f64) -> SmoothProfile {
    let o = order(n, s);
    build_psi(&o, &choose_kappa(&o, 2000).unwrap()).unwrap()
}

#[test]
fn kappa_search_certifies_margins() {
    for (n, s, kappa, r_bar) in [(3, 0.5, 2.0, 0.8708), (1, 0.25, 1.0, 0.8512)] {
        let c = choose_kappa(&order(n, s), CERT_NODES).unwrap();
        assert_eq!(c.kappa, kappa);
        assert!((c.r_bar - r_bar).abs() < 1e-4, "{}", c.r_bar);
        for m in [c.margin_a, c.margin_b, c.margin_c, c.margin_d] {
            assert!(m > 0.0, "{c:?}");
        }
    }
}

#[test]
fn profile_meets_lemma_on_fine_grid() {
    for n in [1, 3] {
        let l = &report(n).lemma;
        assert_eq!(l.nodes, CERT_NODES);
        assert!(l.min_psi > 0.0);
        assert!(l.max_dpsi < 0.0);
        assert!(l.max_d2psi_inner < 0.0);
        assert!(l.tail_identical);
        for join in l.matching {
            assert!(join[0] <= C1_TOL && join[1] <= C1_TOL, "{join:?}");
            assert!(join[2] <= C2_TOL, "{join:?}");
        }
        assert!(l.comparison_margin.0 >= 0.0 && l.comparison_margin.1 >= 0.0);
        assert!(l.property5_margin > 0.0);
        assert!(l.f_gap_min > 0.0 && l.f_gap_decreasing);
        assert!(l.property6_direct >= 0.0 && l.property6_margin > 0.0);
        // θ' underflows only in a thin layer next to r = 1
        assert!(l.unresolved_nodes <= 20 && l.unresolved_from > 0.99, "{} {}", l.unresolved_nodes, l.unresolved_from);
    }
}

#[test]
fn touching_point_is_recovered() {
    for n in [1, 3] {
        let l = &report(n).lemma;
        let &(r0, _, hit) = l.touching.iter().find(|t| (t.0 - 0.7).abs() < 1e-12).unwrap();
        assert!((hit - r0).abs() <= l.touching_cell + 1e-12, "{hit} vs {r0}");
        for &(r0, _, hit) in &l.touching {
            assert!((hit - r0).abs() <= l.touching_cell + 1e-12, "{hit} vs {r0}");
        }
    }
}

#[test]
fn f_tends_to_one() {
    let p = profile(3, 0.5);
    let near: Vec<f64> = [0.9, 0.95, 0.98].iter().map(|&r| p.f_gap(r)).collect();
    assert!(near.windows(2).all(|w| w[1] < w[0]) && near[2] < 0.02, "{near:?}");
}

#[test]
fn gamma_is_a_positive_probability_density() {
    for n in [1, 3] {
        let f = &report(n).field;
        assert!(f.positivity_min > 0.0);
        // exact value 1; frozen bound well inside the certification tolerance
        assert!((f.total_mass - 1.0).abs() <= 1e-9, "{}", f.total_mass);
        assert!(f.tail_spread < 0.01, "{}", f.tail_spread);
        assert!(f.interior_err < 1e-8, "{}", f.interior_err);
    }
}

#[test]
fn interior_and_exterior_formulas_agree_at_the_unit_sphere() {
    for (n, s) in [(1, 0.25), (3, 0.5)] {
        let p = profile(n, s);
        let op = GammaOp::new(&p).unwrap();
        let (inner, _) = op.interior(1.0).unwrap();
        let outer = op.exterior(1.0);
        assert!((inner - outer).abs() <= 1e-9 * outer.abs(), "{inner} vs {outer}");
    }
}

#[test]
fn gamma_operator_rejects_unsupported_dimensions() {
    let o = order(2, 0.5);
    let p = build_psi(&o, &choose_kappa(&o, 2000).unwrap());
    if let Ok(p) = p {
        assert!(GammaOp::new(&p).is_err());
    }
}

#[test]
fn rescaled_gamma_converges_to_riesz_kernel() {
    for n in [1, 3] {
        let sc = &report(n).scaling;
        assert!(sc.pass);
        assert!(sc.ratios.iter().all(|&r| r >= SCALING_RATE), "{:?}", sc.ratios);
        assert!(sc.gaps.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn mean_value_corpus() {
    for n in [1, 3] {
        let r = report(n);
        let mass = r.field.total_mass;
        for m in &r.mean_value {
            match m.function {
                TestFunction::Constant { value } => {
                    for g in &m.gaps {
                        assert!((g - value * (1.0 - mass)).abs() <= 1e-12, "{g}");
                    }
                }
                // ⟨Φ(· - y), γ_λ⟩ = Φ(d) exactly while λ < d
                TestFunction::Fundamental { .. } => {
                    assert!(m.gaps.iter().all(|g| g.abs() <= MEAN_VALUE_TOL), "{:?}", m.gaps);
                }
                TestFunction::Generator => {
                    assert!(m.min_gap > 0.0 && m.holds, "{:?}", m.gaps);
                }
                TestFunction::NegativeBump { .. } => {
                    assert!(!m.holds && m.min_gap < -0.1, "{:?}", m.gaps);
                }
            }
        }
        assert!(r.control_detected);
        assert!(r.pass);
    }
}

#[test]
fn fundamental_solution_reproduced_by_riesz_potential() {
    for n in [1, 3] {
        for &(d, pot, g) in &report(n).riesz {
            assert!((pot - g).abs() <= MEAN_VALUE_TOL * g, "d={d}: {pot} vs {g}");
        }
    }
}

#[test]
fn pole_inside_support_is_rejected() {
    let p = profile(1, 0.25);
    let op = GammaOp::new(&p).unwrap();
    assert!(mean_value_check(&op, TestFunction::Fundamental { distance: 0.4 }, &[0.5]).is_err());
}

#[test]
fn scaled_profiles_are_ordered() {
    for n in [1, 3] {
        assert!(report(n).ordering_min >= -ROUNDING_TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_lambda_is_monotone_in_lambda(l1 in 0.05f64..3.0, f in 1.01f64..4.0, r in 0.01f64..6.0) {
        let p = profile(3, 0.5);
        let (a, b) = (p.gamma_lambda(l1, r), p.gamma_lambda(l1 * f, r));
        prop_assert!(a >= b * (1.0 - ROUNDING_TOL), "{} < {}", a, b);
    }

    #[test]
    fn profile_lies_below_phi_and_decreases(r in 0.02f64..3.0) {
        let p = profile(1, 0.25);
        prop_assert!(p.psi(r) <= p.phi.f(r) * (1.0 + ROUNDING_TOL));
        prop_assert!(p.dpsi(r) < 0.0);
        prop_assert!(p.dpsi(r) >= p.phi.d1(r) * (1.0 + ROUNDING_TOL));
    }
}
