use proptest::prelude::*;

use roqam::c64;
use roqam::costing::{iqae_queries, optimize_step_cost, roqam_total_t, LogBase, RoqamCostConfig, StepCostOptions};
use roqam::emulation::{default_timestep, run_roqam, Budget, GeneratorSpec, NoiseModel, Repair, SpectralMeasure};
use roqam::exact::{diagonalize, GroundPair, Spectrum};
use roqam::fermion::{apply_ladder, build_siam, two_site_dmft_params, FermionHamiltonian, Ladder};
use roqam::greens::{exact_greens_estimate, mean_relative_error, median, roqam_greens_diagonal, FrequencyGrid, RoqamConfig};
use roqam::linalg::max_abs_diff;
use roqam::qsvt::{eval_p_mi, inversion_poly_params, qsvt_t_count, InversionPolynomial};

fn siam(n_bath: usize) -> (FermionHamiltonian, Spectrum, GroundPair) {
    let h = build_siam(&two_site_dmft_params(5.0, n_bath).unwrap()).unwrap();
    let s = diagonalize(h.dense.as_ref()).unwrap();
    let g = s.ground();
    (h, s, g)
}

fn cost(n_bath: usize, r: usize, delta1: f64) -> u64 {
    let (h, s, g) = siam(n_bath);
    let cfg = RoqamCostConfig {
        r,
        delta1,
        budget: Budget::Eb3,
        p: 0,
        options: StepCostOptions::new(default_timestep(s.norm())),
    };
    roqam_total_t(&h, &s, &g, &cfg).unwrap().0.t_count
}

#[test]
fn repair_improves_noisy_estimates() {
    let (_, s, g) = siam(2);
    let grid = FrequencyGrid::default_real(5.0, 0.4).unwrap();
    let ex = exact_greens_estimate(&s, &g, 0, 0, &grid).unwrap();
    let err = |seed, repair| {
        let mut cfg = RoqamConfig::new(NoiseModel { budget: Budget::Eb1, delta_base: 1e-3, seed, r: 3 });
        cfg.repair = repair;
        mean_relative_error(&roqam_greens_diagonal(&s, &g, 0, &grid, &cfg).unwrap(), &ex).unwrap()
    };
    let mut wins = [0; 2];
    for seed in 0..100 {
        let raw = err(seed, Repair::None);
        wins[0] += usize::from(err(seed, Repair::UnitaryProjection) <= raw);
        wins[1] += usize::from(err(seed, Repair::HermitianProjection) <= raw);
    }
    assert!(wins.iter().all(|&w| w >= 75), "{wins:?}");
}

#[test]
fn repaired_generators_agree() {
    let (_, s, g) = siam(1);
    let chi = apply_ladder(Ladder::Create, 0, &g.psi0);
    let meas = SpectralMeasure::from_state(&s, &chi);
    let gen = GeneratorSpec::time_evolution(default_timestep(s.norm()));
    let delta = 1e-4;
    for seed in 0..20 {
        let noise = NoiseModel { budget: Budget::Eb1, delta_base: delta, seed, r: 2 };
        let a = run_roqam(&meas, &gen, &noise, 0, Repair::UnitaryProjection, 1e-10).unwrap();
        let b = run_roqam(&meas, &gen, &noise, 0, Repair::HermitianProjection, 1e-10).unwrap();
        // noise scale in energy units
        let scale = delta / gen.dt;
        assert!(max_abs_diff(a.h_proj.as_ref(), b.h_proj.as_ref()) < 10.0 * scale);
    }
}

#[test]
fn noise_floor_is_ordered() {
    let (_, s, g) = siam(2);
    let grid = FrequencyGrid::default_imaginary().unwrap();
    let ex = exact_greens_estimate(&s, &g, 0, 0, &grid).unwrap();
    let med = |delta_base: f64| {
        let errs: Vec<f64> = (0..20)
            .map(|seed| {
                let cfg = RoqamConfig::new(NoiseModel { budget: Budget::Eb3, delta_base, seed, r: 5 });
                mean_relative_error(&roqam_greens_diagonal(&s, &g, 0, &grid, &cfg).unwrap(), &ex).unwrap()
            })
            .collect();
        median(&errs)
    };
    let noiseless = mean_relative_error(&roqam_greens_diagonal(&s, &g, 0, &grid, &RoqamConfig::noiseless(5)).unwrap(), &ex).unwrap();
    let (a, b) = (med(1e-3), med(1e-5));
    assert!(a > b && b > noiseless, "{a} {b} {noiseless}");
}

#[test]
fn roqam_cost_is_monotone() {
    let base = cost(1, 3, 1e-3);
    assert!(cost(1, 3, 1e-4) >= base);
    assert!(cost(1, 4, 1e-3) >= base);
    assert!(cost(2, 3, 1e-3) >= base);
    assert_eq!(cost(1, 3, 1e-3), base);
}

#[test]
fn looser_late_budgets_are_cheaper() {
    let (h, s, g) = siam(1);
    let total = |budget| {
        let cfg = RoqamCostConfig { r: 3, delta1: 1e-3, budget, p: 0, options: StepCostOptions::new(default_timestep(s.norm())) };
        roqam_total_t(&h, &s, &g, &cfg).unwrap().0.t_count
    };
    assert!(total(Budget::Eb3) < total(Budget::Eb1));
}

#[test]
fn estimates_are_reproducible() {
    let (_, s, g) = siam(1);
    let grid = FrequencyGrid::default_real(5.0, 0.4).unwrap();
    let cfg = RoqamConfig::new(NoiseModel { budget: Budget::Eb2, delta_base: 1e-3, seed: 5, r: 3 });
    let a = roqam_greens_diagonal(&s, &g, 0, &grid, &cfg).unwrap().to_csv();
    let b = roqam_greens_diagonal(&s, &g, 0, &grid, &cfg).unwrap().to_csv();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn step_plans_are_feasible(l in 1usize..4, delta in 1e-5f64..0.3) {
        let (h, s, g) = siam(1);
        let chi = apply_ladder(Ladder::Create, 0, &g.psi0);
        let opts = StepCostOptions::new(default_timestep(s.norm()));
        let plan = optimize_step_cost(&h, &s, &chi, l, delta, &opts).unwrap();
        prop_assert!(plan.is_feasible());
        prop_assert!(plan.eps_qae + plan.eps_trot + plan.eps_syn <= delta);
    }

    #[test]
    fn queries_fall_with_failure_probability(eps in 1e-6f64..0.3, p in 0.001f64..0.1) {
        let a = iqae_queries(eps, p, LogBase::Natural).unwrap();
        let b = iqae_queries(eps, p * 2.0, LogBase::Natural).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn inversion_polynomial_is_odd(x in -1.0f64..1.0) {
        let poly = InversionPolynomial::new(inversion_poly_params(10.0, 0.1).unwrap()).unwrap();
        let a = eval_p_mi(x, &poly).unwrap();
        let b = eval_p_mi(-x, &poly).unwrap();
        prop_assert!((a + b).abs() < 1e-10);
    }

    #[test]
    fn qsvt_reports_balance(re in -6.0f64..6.0, im in 0.05f64..3.0, eps in 1e-4f64..1e-1) {
        let (h, s, g) = siam(1);
        let (rep, _) = qsvt_t_count(&h, &s, &g, 0, c64::new(re, im), eps).unwrap();
        prop_assert_eq!(rep.t_count, rep.breakdown.values().sum::<u64>());
        let (looser, _) = qsvt_t_count(&h, &s, &g, 0, c64::new(re, im), 2.0 * eps).unwrap();
        prop_assert!(looser.t_count <= rep.t_count);
    }
}
