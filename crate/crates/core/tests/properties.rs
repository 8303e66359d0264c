use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use sibgain_core::analytic::{partial_coefficients_from_matrix, SINGULAR_CONDITION};
use sibgain_core::config::{parse_config, to_toml};
use sibgain_core::harness::run_replications;
use sibgain_core::{
    build_scenario, closed_form_b1_b2, fit, gain_score_regression, generate_replication, implied_covariance_matrix,
    partial_coefficients, run_cell, topological_order, trek_covariance, validate, with_threads, ScenarioConfig,
    ScenarioId, SimulationSet, Var,
};

fn coefficient() -> impl Strategy<Value = f64> {
    -1.5f64..1.5
}

fn scenario() -> impl Strategy<Value = ScenarioId> {
    proptest::sample::select(ScenarioId::ALL.to_vec())
}

prop_compose! {
    fn config_for(id: ScenarioId)(
        c in proptest::collection::vec(coefficient(), 14)
    ) -> ScenarioConfig {
        ScenarioConfig {
            delta: c[0], chi: c[1], gamma: c[2], psi: c[3], eta: c[4], pi: c[5], phi: c[6],
            tau: c[7], nu: c[8], lambda: c[9], omega: c[10], theta: c[11],
            kappa: if id == ScenarioId::Fig2F { 0.0 } else { c[12] },
            mu: if id == ScenarioId::Fig2F { c[13] } else { 0.0 },
            ..ScenarioConfig::default()
        }
    }
}

fn scenario_and_config() -> impl Strategy<Value = (ScenarioId, ScenarioConfig)> {
    scenario().prop_flat_map(|id| (Just(id), config_for(id)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn treks_match_matrix_oracle((id, config) in scenario_and_config()) {
        let model = build_scenario(id, &config).unwrap();
        let sigma = implied_covariance_matrix(&model).unwrap();
        prop_assert!(sigma.is_symmetric(1e-12));
        for &x in model.variables() {
            for &y in model.variables() {
                let a = trek_covariance(&model, x, y).unwrap();
                let b = sigma.get(x, y).unwrap();
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{id} cov({x},{y}) {a} vs {b}");
            }
        }
    }

    #[test]
    fn built_models_validate((id, config) in scenario_and_config()) {
        let model = build_scenario(id, &config).unwrap();
        prop_assert!(validate(&model).is_ok());
        let order = topological_order(&model).unwrap();
        prop_assert_eq!(order.last(), Some(&Var::D));
        let position = |v: Var| order.iter().position(|&o| o == v).unwrap();
        for edge in model.directed_edges() {
            prop_assert!(position(edge.source) < position(edge.target));
        }
    }

    #[test]
    fn covariance_is_linear_in_pi(
        delta in coefficient(), chi in coefficient(), gamma in coefficient(),
        psi in coefficient(), eta in coefficient(), pi in coefficient(),
    ) {
        // Reduced form: every C association runs through U', and structural
        // noise is independent of C.
        let cfg = ScenarioConfig { delta, chi, gamma, psi, eta, pi, ..ScenarioConfig::default() };
        let model = build_scenario(ScenarioId::Fig1D, &cfg).unwrap();
        let c_y1 = pi * (delta * chi + psi);
        let c_y2 = pi * (delta * gamma + psi) + eta * c_y1;
        let got = trek_covariance(&model, Var::C, Var::D).unwrap();
        prop_assert!((got - (c_y2 - c_y1)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_projection(
        delta in coefficient(), chi in -0.9f64..0.9, gamma in -0.9f64..0.9,
        psi in coefficient(), eta in coefficient(),
    ) {
        prop_assume!((chi * gamma).abs() < 0.95);
        let cfg = ScenarioConfig { delta, chi, gamma, psi, eta, ..ScenarioConfig::default() };
        let regressors = [Var::T1, Var::T2];
        for (id, interference) in [(ScenarioId::Fig1A, false), (ScenarioId::Fig1B, true)] {
            let model = build_scenario(id, &cfg).unwrap();
            let pr = partial_coefficients(&model, &regressors, Var::D);
            // Degenerate draws are reported as collinear instead of solved.
            let Ok(pr) = pr else { continue };
            prop_assume!(pr.condition_number < SINGULAR_CONDITION / 1e4);
            let (b1, b2) = closed_form_b1_b2(&cfg, interference).unwrap();
            let tol = 1e-8 * pr.condition_number.max(1.0);
            prop_assert!((pr.coefficients[0] - b1).abs() < tol, "{id} b1 {} vs {b1}", pr.coefficients[0]);
            prop_assert!((pr.coefficients[1] - b2).abs() < tol, "{id} b2 {} vs {b2}", pr.coefficients[1]);
        }
    }

    #[test]
    fn no_interference_means_null_c(
        delta in coefficient(), chi in -0.9f64..0.9, gamma in -0.9f64..0.9,
        psi in coefficient(), pi in -0.9f64..0.9,
    ) {
        let cfg = ScenarioConfig { delta, chi, gamma, psi, pi, eta: 0.0, ..ScenarioConfig::default() };
        let model = build_scenario(ScenarioId::Fig1D, &cfg).unwrap();
        let sigma = implied_covariance_matrix(&model).unwrap();
        prop_assume!(sigma.is_positive_semidefinite(1e-9));
        if let Ok(pr) = partial_coefficients_from_matrix(&sigma, &[Var::T1, Var::T2, Var::C], Var::D) {
            prop_assume!(!pr.near_collinear);
            prop_assert!(pr.coefficient(Var::C).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn ols_interpolates_exact_lines(
        a in -10.0f64..10.0, b in -10.0f64..10.0, c in -10.0f64..10.0,
        xs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 8..40),
    ) {
        let x1: Vec<f64> = xs.iter().map(|p| p.0).collect();
        let x2: Vec<f64> = xs.iter().map(|p| p.1).collect();
        let y: Vec<f64> = xs.iter().map(|p| a + b * p.0 + c * p.1).collect();
        match fit(&[&x1, &x2], &y) {
            Ok(f) => {
                prop_assert!((f.intercept.coefficient - a).abs() < 1e-9);
                prop_assert!((f.estimates[0].coefficient - b).abs() < 1e-9);
                prop_assert!((f.estimates[1].coefficient - c).abs() < 1e-9);
            }
            // Random points can be collinear in tiny samples.
            Err(e) => {
                let collinear = matches!(e, sibgain_core::Error::CollinearDesign { .. });
                prop_assert!(collinear, "unexpected error {}", e);
            }
        }
    }

    #[test]
    fn config_round_trips((_, config) in scenario_and_config(), seed in any::<u64>(), n_obs in 2usize..100_000, n_runs in 1usize..5000) {
        let config = ScenarioConfig { seed, n_obs, n_runs, ..config };
        prop_assert_eq!(parse_config(&to_toml(&config)).unwrap(), config);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relabeling_siblings_is_antisymmetric(id in scenario(), run in 0usize..50) {
        let cfg = ScenarioConfig { n_obs: 400, eta: 0.3, pi: 0.5, ..ScenarioConfig::baseline() };
        let cfg = sibgain_core::harness::grid_config(id, &cfg);
        let sample = generate_replication(&cfg, id, run).unwrap();
        let a = gain_score_regression(&sample, id.has_c(), false).unwrap();
        let b = gain_score_regression(&sample.swap_siblings(), id.has_c(), false).unwrap();
        prop_assert!((b.estimates[0].coefficient + a.estimates[1].coefficient).abs() < 1e-9);
        prop_assert!((b.estimates[1].coefficient + a.estimates[0].coefficient).abs() < 1e-9);
        if id.has_c() {
            prop_assert!((b.estimates[2].coefficient + a.estimates[2].coefficient).abs() < 1e-9);
        }
    }

    #[test]
    fn thread_count_is_invisible(threads in 2usize..6, seed in any::<u64>()) {
        let cfg = ScenarioConfig { n_obs: 300, n_runs: 16, seed, ..ScenarioConfig::baseline() };
        let one = with_threads(1, || run_cell(ScenarioId::Fig2B, SimulationSet::S22, &cfg)).unwrap().unwrap();
        let many = with_threads(threads, || run_cell(ScenarioId::Fig2B, SimulationSet::S22, &cfg)).unwrap().unwrap();
        prop_assert_eq!(one, many);
    }
}

#[test]
fn doubling_runs_keeps_means_within_three_standard_errors() {
    let half = ScenarioConfig { n_obs: 500, n_runs: 100, eta: 0.3, pi: 0.5, ..ScenarioConfig::baseline() };
    let full = ScenarioConfig { n_runs: 200, ..half.clone() };
    let a = run_replications(ScenarioId::Fig1D, &half).unwrap();
    let b = run_replications(ScenarioId::Fig1D, &full).unwrap();
    for (ra, rb) in a.regressors.iter().zip(&b.regressors) {
        let se = ra.mc_standard_error(a.n_runs);
        assert!((ra.mean_coefficient - rb.mean_coefficient).abs() <= 3.0 * se, "{}", ra.label);
    }
}

#[test]
fn marginal_proportions() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let cfg = ScenarioConfig { n_obs: 200_000, pi: 0.0, ..ScenarioConfig::baseline() };
    let sample = generate_replication(&cfg, ScenarioId::Fig1D, 0).unwrap();
    let p_c = sibgain_core::PairSample::proportion(&sample.c);
    let p_t1 = sibgain_core::PairSample::proportion(&sample.t1);
    // Binomial standard errors at n = 200k are about 0.001.
    assert!((p_c - (1.0 - normal.cdf(1.0))).abs() < 0.005, "P(C) {p_c}");
    assert!((p_t1 - normal.cdf(0.2)).abs() < 0.005, "P(T1) {p_t1}");
    let mean_u = sibgain_core::PairSample::mean(&sample.u_prime);
    assert!(mean_u.abs() < 0.01);
}

#[test]
fn fig1d_c_to_d_covariance_at_worked_values() {
    let cfg = ScenarioConfig { eta: 0.3, pi: 0.5, ..ScenarioConfig::baseline() };
    let model = build_scenario(ScenarioId::Fig1D, &cfg).unwrap();
    // Sum of the six C -> D treks: -1.5 + 3 - 2.5 + 2.5 + 0.45 + 0.75.
    assert!((trek_covariance(&model, Var::C, Var::D).unwrap() - 2.7).abs() < 1e-12);
}
