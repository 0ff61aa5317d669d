use proptest::prelude::*;
use resonance_core::invariants::*;
use resonance_core::model::*;

fn state() -> impl Strategy<Value = CartesianState> {
    (prop::array::uniform4(-1.0f64..1.0), prop::array::uniform4(-1.0f64..1.0))
        .prop_map(|(q, p)| CartesianState::new(q, p))
}

fn integral_values() -> impl Strategy<Value = IntegralValues> {
    (0.5f64..2.0, -0.9f64..0.9, -0.9f64..0.9).prop_map(|(n, a, b)| IntegralValues::new(n, a * n, b * n))
}

// drift at fixed tol grows steeply with n (the reduced rates scale with n)
fn small_integral_values() -> impl Strategy<Value = IntegralValues> {
    (0.5f64..1.0, -0.9f64..0.9, -0.9f64..0.9).prop_map(|(n, a, b)| IntegralValues::new(n, a * n, b * n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pi_identities(s in state()) {
        let pv = pi_map(&s);
        for i in 1..=4 {
            prop_assert!(pv.get(i) >= 0.0);
        }
        prop_assert!(pv.identity_residual() < 1e-12);
    }

    #[test]
    fn second_space_relations(s in state()) {
        let kv = klj_map(&pi_map(&s));
        let (r1, r2) = second_space_residuals(&kv);
        prop_assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12);
        let p = ModelParams::new(1.0, 0.0, 1.0, 0.5);
        prop_assert!((kv.h2 - hamiltonian(&s, &p)).abs() < 1e-14);
        let (xi, l1) = first_integrals(&s);
        prop_assert!((kv.xi - xi).abs() < 1e-15);
        prop_assert!((kv.l[0] - l1).abs() < 1e-15);
    }

    #[test]
    fn thrice_reduced_relations(s in state()) {
        let pt = thrice_reduced_point(&s);
        for r in pt.relation_residuals() {
            prop_assert!(r.abs() < 1e-12);
        }
        prop_assert!(pt.casimir().abs() < 1e-12);
    }

    #[test]
    fn brackets_reproduce_table(s in state()) {
        prop_assert!(bracket_table_check(&s) < 1e-10);
    }

    #[test]
    fn l1_is_central(s in state()) {
        let (_, table) = bracket_matrix(&s, &BracketTable::default());
        for j in 0..5 {
            prop_assert_eq!(table[5][j], 0.0);
        }
    }

    #[test]
    fn h3_ignores_s(iv in integral_values(), t in 0.0f64..1.0, angle in 0.0f64..std::f64::consts::TAU, beta in 0.0f64..2.0) {
        let (lo, hi) = feasible_interval(&iv).unwrap();
        let k = lo + t * (hi - lo);
        let a = ThriceReducedPoint::on_surface(iv, k, angle).unwrap();
        let b = ThriceReducedPoint { S: -a.S, ..a };
        prop_assert_eq!(reduced_h3(&a, beta), reduced_h3(&b, beta));
        prop_assert_eq!(a.casimir(), b.casimir());
    }

    #[test]
    fn feasible_endpoints_are_roots(iv in integral_values()) {
        let (lo, hi) = feasible_interval(&iv).unwrap();
        let scale = iv.n.powi(4).max(1.0);
        prop_assert!(f_of_k(lo, &iv).abs() < 1e-10 * scale);
        prop_assert!(f_of_k(hi, &iv).abs() < 1e-10 * scale);
        prop_assert!(f_of_k(0.5 * (lo + hi), &iv) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn reduced_flow_conserves(iv in small_integral_values(), t in 0.05f64..0.95, angle in 0.0f64..std::f64::consts::TAU, beta in 0.0f64..2.0) {
        let (lo, hi) = feasible_interval(&iv).unwrap();
        let pt = ThriceReducedPoint::on_surface(iv, lo + t * (hi - lo), angle).unwrap();
        let scale = iv.n.powi(4).max(1.0);
        let tr = reduced_flow(&pt, beta, 1000.0, 1e-12).unwrap();
        prop_assert!(tr.max_casimir_drift() < 1e-8 * scale, "{}", tr.max_casimir_drift());
        prop_assert!(tr.max_h3_drift() < 1e-8 * scale, "{}", tr.max_h3_drift());
        // drift follows the tolerance
        let coarse = reduced_flow(&pt, beta, 1000.0, 1e-9).unwrap();
        prop_assert!(tr.max_casimir_drift() <= coarse.max_casimir_drift().max(1e-13 * scale));
    }

    #[test]
    fn reflection_reverses_time(iv in integral_values(), t in 0.05f64..0.95, angle in 0.0f64..std::f64::consts::TAU, beta in 0.0f64..2.0) {
        // (K, N, S)(t) ↦ (K, N, −S)(−t): run the reflected point forward and
        // compare with the original run backwards via the reflected end state
        let (lo, hi) = feasible_interval(&iv).unwrap();
        let pt = ThriceReducedPoint::on_surface(iv, lo + t * (hi - lo), angle).unwrap();
        let tol = 1e-12;
        let fwd = reduced_flow_at(&pt, beta, &[5.0], tol).unwrap();
        let end = fwd.samples.last().unwrap();
        let back0 = ThriceReducedPoint { K: end.K, N: end.N, S: -end.S, ..pt };
        let back0 = ThriceReducedPoint {
            M: 0.5 * (iv.n * iv.n + iv.xi * iv.xi - end.K * end.K - iv.l * iv.l),
            Z: iv.n * iv.xi - end.K * iv.l,
            ..back0
        };
        let back = reduced_flow_at(&back0, beta, &[5.0], tol).unwrap();
        let b = back.samples.last().unwrap();
        let scale = iv.n.powi(2).max(1.0);
        prop_assert!((b.K - pt.K).abs() < 1e-8 * scale);
        prop_assert!((b.N - pt.N).abs() < 1e-8 * scale);
        prop_assert!((b.S + pt.S).abs() < 1e-8 * scale);
    }
}

#[test]
fn k_is_constant_at_beta_two() {
    let iv = IntegralValues::new(1.0, 0.3, 0.1);
    let (lo, hi) = feasible_interval(&iv).unwrap();
    let pt = ThriceReducedPoint::on_surface(iv, 0.3 * lo + 0.7 * hi, 1.0).unwrap();
    let tr = reduced_flow(&pt, 2.0, 1000.0, 1e-12).unwrap();
    assert!(tr.max_k_drift() < 1e-10);
    let tr = reduced_flow(&pt, 1.0, 1000.0, 1e-12).unwrap();
    assert!(tr.max_casimir_drift() < 1e-8);
}
