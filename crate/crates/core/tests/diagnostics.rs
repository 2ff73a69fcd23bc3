mod common;

use proptest::prelude::*;

use sirb_core::diagnostics::{
    compensator_check, lln_experiment, martingale_residual, sup_distance, LlnSetup, Regime,
};
use sirb_core::deterministic::StepSize;
use sirb_core::stats::mean_stderr;
use sirb_core::stochastic::{run_replicas, simulate_ssa, SystemState};
use sirb_core::{
    Compartment, CompartmentFields, EpidemicParams, FieldSelection, SampleGrid, SampledPath, ScalingParams,
    TransportCoefficients,
};

use common::{generic_params, smooth_initial};

fn bacteria_only(n: usize, ell: f64, p_out: f64, mu_b: f64) -> EpidemicParams {
    let tc = TransportCoefficients::new(ell, p_out, n).unwrap();
    EpidemicParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, mu_b, tc).unwrap()
}

#[test]
fn residual_starts_at_zero_and_vanishes_without_events() {
    let params = bacteria_only(4, 0.0, 0.5, 0.0);
    let scaling = ScalingParams::new(4, 10, 10).unwrap();
    let s0 = SystemState::uniform(4, [3, 2, 1, 5]).unwrap();
    let grid = SampleGrid::uniform(1.0, 5).unwrap();
    let traj = simulate_ssa(&s0, &grid, &params, &scaling, sirb_core::stochastic::RngSeed::new(0), true).unwrap();
    let z = martingale_residual(&traj, &params).unwrap();
    assert!(z.fields.iter().all(|f| f.sup_norm() == 0.0));
    let check = compensator_check(&[traj], &params).unwrap();
    assert!(check.observed_mean.iter().flatten().flatten().all(|&v| v == 0.0));
    assert!(check.predicted_mean.iter().flatten().flatten().all(|&v| v == 0.0));
}

#[test]
fn pure_death_compensator_means_agree() {
    let k = 50;
    let params = bacteria_only(3, 0.0, 0.5, 1.2);
    let scaling = ScalingParams::new(3, 1, k).unwrap();
    let s0 = SystemState::new(vec![0; 3], vec![0; 3], vec![0; 3], vec![k, 0, 0]).unwrap();
    let grid = SampleGrid::uniform(1.0, 5).unwrap();
    let runs = run_replicas(400, 21, |seed| simulate_ssa(&s0, &grid, &params, &scaling, seed, true)).unwrap();
    let check = compensator_check(&runs, &params).unwrap();
    for t in 1..grid.len() {
        let (m, se) = (check.residual_mean[t][0][3], check.residual_stderr[t][0][3]);
        assert!(m.abs() <= 3.0 * se, "t index {t}: {m} ± {se}");
        // E[deaths by t] = K(1 − e^{−μ_B t}), each contributing K⁻²
        let expected = (1.0 - (-1.2 * grid.times()[t]).exp()) / k as f64;
        assert!((check.observed_mean[t][0][3] - expected).abs() < 4.0 * se + 1e-4);
    }
}

#[test]
fn pure_transport_cross_terms_are_negative_and_compensated() {
    let k = 40;
    let params = bacteria_only(3, 3.0, 0.8, 0.0);
    let scaling = ScalingParams::new(3, 1, k).unwrap();
    let s0 = SystemState::new(vec![0; 3], vec![0; 3], vec![0; 3], vec![k, k / 2, 0]).unwrap();
    let grid = SampleGrid::uniform(1.0, 5).unwrap();
    let runs = run_replicas(300, 22, |seed| simulate_ssa(&s0, &grid, &params, &scaling, seed, true)).unwrap();
    let check = compensator_check(&runs, &params).unwrap();
    for t in 1..grid.len() {
        for i in 0..3 {
            assert!(check.observed_mean[t][i][4] < 0.0);
            assert!(check.predicted_mean[t][i][4] < 0.0);
        }
    }
    assert!(check.residual_pass_fraction(4, 3.0) >= 0.95);
    assert!(check.residual_pass_fraction(5, 3.0) >= 0.95);
}

#[test]
fn wrong_rates_fail_the_martingale_test() {
    let n = 4;
    let params = generic_params(n);
    let scaling = ScalingParams::new(n, 100, 100).unwrap();
    let v0 = CompartmentFields::project(&smooth_initial, n, 16).unwrap();
    let (s0, _) = SystemState::from_densities(&v0, &scaling).unwrap();
    let grid = SampleGrid::uniform(1.0, 11).unwrap();
    let runs = run_replicas(200, 77, |seed| simulate_ssa(&s0, &grid, &params, &scaling, seed, true)).unwrap();
    let mut wrong = params;
    wrong.mu_b *= 1.5;
    let check = compensator_check(&runs, &wrong).unwrap();
    assert!(check.z_pass_fraction(Compartment::B, 3.0) < 0.5);
    assert!(check.residual_pass_fraction(3, 3.0) < 0.5);
    // unaffected compartments still pass
    assert!(check.z_pass_fraction(Compartment::R, 3.0) >= 0.95);
}

#[test]
fn z_mean_is_zero_in_the_s_field() {
    let n = 4;
    let params = generic_params(n);
    let scaling = ScalingParams::new(n, 100, 100).unwrap();
    let v0 = CompartmentFields::project(&smooth_initial, n, 16).unwrap();
    let (s0, _) = SystemState::from_densities(&v0, &scaling).unwrap();
    let grid = SampleGrid::uniform(1.0, 3).unwrap();
    let runs = run_replicas(200, 5, |seed| simulate_ssa(&s0, &grid, &params, &scaling, seed, true)).unwrap();
    let zs: Vec<f64> = runs
        .iter()
        .map(|r| martingale_residual(r, &params).unwrap().fields[2].get(Compartment::S).values()[1])
        .collect();
    let (m, se) = mean_stderr(&zs);
    assert!(m.abs() <= 3.0 * se);
}

#[test]
fn single_rung_ladder_reports_distances() {
    let params = generic_params(4);
    let grid = SampleGrid::uniform(0.5, 3).unwrap();
    let setup = LlnSetup {
        initial: &smooth_initial,
        params: &params,
        grid: &grid,
        replicas: 3,
        seed: 1,
        regime: Regime::Theorem1,
        step: StepSize::Auto,
    };
    let report = lln_experiment(&[ScalingParams::new(4, 50, 50).unwrap()], &setup).unwrap();
    assert_eq!(report.rungs.len(), 1);
    assert!(report.rungs[0].distances.iter().all(|&d| d >= 0.0));
    assert!(report.rungs[0].q25 <= report.rungs[0].median && report.rungs[0].median <= report.rungs[0].q75);
    let bad = [ScalingParams::new(4, 50, 50).unwrap(), ScalingParams::new(4, 50, 500).unwrap()];
    assert!(matches!(lln_experiment(&bad, &setup), Err(sirb_core::Error::Regime(_))));
}

fn random_path(values: &[f64]) -> SampledPath {
    let n = 3;
    let states = values
        .chunks(4 * n)
        .map(|c| CompartmentFields::from_flat(c).unwrap())
        .collect::<Vec<_>>();
    SampledPath {
        times: (0..states.len()).map(|k| k as f64).collect(),
        states,
    }
}

proptest! {
    #[test]
    fn sup_distance_is_a_metric(
        a in proptest::collection::vec(-5.0f64..5.0, 24),
        b in proptest::collection::vec(-5.0f64..5.0, 24),
        c in proptest::collection::vec(-5.0f64..5.0, 24),
    ) {
        let (a, b, c) = (random_path(&a), random_path(&b), random_path(&c));
        let d = |x: &SampledPath, y: &SampledPath| sup_distance(x, y, FieldSelection::All).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}
