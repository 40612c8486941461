use cellfree::adc_energy::{AdcProfile, EnergyConstants};
use cellfree::antenna::{
    bpso, exhaustive_search, init_particles, BpsoOptions, PowerMode, SelectionProblem, EXHAUSTIVE_CAP,
};
use cellfree::association::{selection_mask, Association};
use cellfree::channel::{NetworkInstance, PilotAssignment, Positions};
use cellfree::experiments::{budget_watt, oracle_config, prepare, ExperimentConfig, Prepared};
use cellfree::power::ScaOptions;
use cellfree::rng::{stream_rng, Stream};
use cellfree::Error;
use ndarray::array;

fn small_config() -> ExperimentConfig {
    let mut config = ExperimentConfig::default();
    let s = &mut config.scenario;
    s.num_aps = 6;
    s.num_users = 4;
    s.users_per_ap = 2;
    s.antennas_per_ap = 4;
    s.low_res_antennas = 3;
    config.bpso.max_iterations = 20;
    config
}

fn problem<'a>(prep: &'a Prepared, config: &ExperimentConfig, fraction: f64) -> SelectionProblem<'a> {
    SelectionProblem {
        instance: &prep.instance,
        profile: &prep.profile,
        mask: &prep.mask,
        constants: config.energy,
        budget_watt: budget_watt(prep.max_energy_watt, fraction),
        sca: config.sca,
    }
}

#[test]
fn swarm_is_deterministic() {
    let config = small_config();
    let prep = prepare(&config, true, 4).unwrap();
    let p = problem(&prep, &config, 0.75);
    let a = bpso(&p, PowerMode::Sca, &config.bpso, 9).unwrap();
    let b = bpso(&p, PowerMode::Sca, &config.bpso, 9).unwrap();
    assert_eq!(a, b);
    let ia = init_particles(&p, 10, 50, 9).unwrap();
    let ib = init_particles(&p, 10, 50, 9).unwrap();
    assert_eq!(ia.particles, ib.particles);
}

#[test]
fn trace_is_monotone_and_best_is_feasible() {
    let config = small_config();
    for seed in 0..50 {
        let prep = prepare(&config, true, seed).unwrap();
        let p = problem(&prep, &config, 0.75);
        for mode in [PowerMode::Sca, PowerMode::Random] {
            let out = bpso(&p, mode, &config.bpso, seed).unwrap();
            assert!(
                out.trace.windows(2).all(|w| w[1] >= w[0]),
                "seed {seed}: {:?}",
                out.trace
            );
            assert_eq!(out.trace.last().copied(), Some(out.best_value));
            assert!(p.is_feasible(&out.best_position));
            assert!(p.selection(&out.best_position).respects(&prep.mask));
            assert!(out.iterations <= config.bpso.max_iterations);
            assert!(out.sca_calls <= out.evaluations);
        }
    }
}

#[test]
fn stop_rule_contract() {
    let config = small_config();
    let prep = prepare(&config, true, 2).unwrap();
    let p = problem(&prep, &config, 0.75);
    let options = BpsoOptions {
        patience: 1,
        ..config.bpso
    };
    let out = bpso(&p, PowerMode::Sca, &options, 2).unwrap();
    let n = out.trace.len();
    if n < options.max_iterations {
        assert!((out.trace[n - 1] - out.trace[n - 2]).abs() <= options.tolerance);
    }
    let never = BpsoOptions {
        tolerance: -1.0,
        max_iterations: 7,
        ..config.bpso
    };
    assert_eq!(bpso(&p, PowerMode::Sca, &never, 2).unwrap().trace.len(), 7);
}

#[test]
fn single_iteration_returns_best_initial_particle() {
    let config = small_config();
    let prep = prepare(&config, true, 1).unwrap();
    let p = problem(&prep, &config, 0.75);
    let options = BpsoOptions {
        max_iterations: 1,
        ..config.bpso
    };
    let out = bpso(&p, PowerMode::Sca, &options, 3).unwrap();
    let initial = init_particles(&p, options.num_particles, 1, 3).unwrap();
    let best = out.particle_values[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.best_value, best);
    assert!(initial.particles.iter().any(|q| q.position == out.best_position));
}

#[test]
fn generous_budget_admits_all_on_start() {
    let config = small_config();
    let prep = prepare(&config, true, 0).unwrap();
    let p = problem(&prep, &config, 1.0);
    assert!(p.is_feasible(&vec![true; p.num_bits()]));
    let swarm = init_particles(&p, 10, 50, 0).unwrap();
    assert_eq!(swarm.repaired_inits, 0);
    assert!(swarm.particles.iter().all(|q| q.velocity.iter().all(|&v| v == 0.0)));
}

#[test]
fn tight_budget_is_diagnosed() {
    let config = small_config();
    let prep = prepare(&config, true, 0).unwrap();
    let mut p = problem(&prep, &config, 0.75);
    p.budget_watt = config.energy.c0 * 2.0;
    match bpso(&p, PowerMode::Sca, &config.bpso, 0) {
        Err(Error::InfeasibleBudget { budget, cheapest, .. }) => assert!(budget <= cheapest),
        other => panic!("expected InfeasibleBudget, got {other:?}"),
    }
}

#[test]
fn evaluation_edge_cases() {
    let config = small_config();
    let prep = prepare(&config, true, 0).unwrap();
    let p = problem(&prep, &config, 0.75);
    let mut rng = stream_rng(0, Stream::RandomPower, &[]);
    let zero = p.evaluate(&vec![false; p.num_bits()], PowerMode::Sca, &mut rng);
    assert_eq!(zero.objective, 0.0);
    let all = p.evaluate(&vec![true; p.num_bits()], PowerMode::Sca, &mut rng);
    assert_eq!(all.objective, f64::NEG_INFINITY);
    assert!(!all.is_feasible());
}

#[test]
fn single_antenna_optimum_is_all_on() {
    let positions = Positions {
        aps: vec![[0.0, 0.0]],
        users: vec![[0.1, 0.0]],
    };
    let instance = NetworkInstance::from_parts(
        positions,
        array![[1.0]],
        PilotAssignment::from_indices(vec![0]),
        10.0,
        1.0,
        1,
        1,
    );
    let profile = AdcProfile::mixed(1, 1, 0);
    let mask = selection_mask(&Association::cell_free(1, 1), 1);
    let p = SelectionProblem {
        instance: &instance,
        profile: &profile,
        mask: &mask,
        constants: EnergyConstants::default(),
        budget_watt: 10.0,
        sca: ScaOptions::default(),
    };
    let out = exhaustive_search(&p).unwrap();
    assert_eq!(out.best_position, vec![true]);
    assert_eq!(out.feasible_count, 2);
    assert_eq!(out.unmasked_count, 2);
    assert!(out.best_value > 0.0);
}

#[test]
fn exhaustive_rejects_large_networks() {
    let mut config = oracle_config(&ExperimentConfig::default());
    config.scenario.num_users = 4;
    config.scenario.users_per_ap = 4;
    let prep = prepare(&config, true, 0).unwrap();
    assert!(prep.mask.full_size() > EXHAUSTIVE_CAP);
    match exhaustive_search(&problem(&prep, &config, 0.75)) {
        Err(Error::ExhaustiveTooLarge { size, cap }) => assert_eq!((size, cap), (24, EXHAUSTIVE_CAP)),
        other => panic!("expected ExhaustiveTooLarge, got {other:?}"),
    }
}

#[test]
fn exhaustive_winner_rescores_and_bounds_swarm() {
    let config = oracle_config(&ExperimentConfig::default());
    let prep = prepare(&config, true, 0).unwrap();
    let mut p = problem(&prep, &config, 0.75);
    p.sca = config.oracle_sca;
    let oracle = exhaustive_search(&p).unwrap();
    assert_eq!(oracle.unmasked_count, 262_144);
    assert_eq!(oracle.enumerated, 262_144);
    assert_eq!(oracle.sca_fallbacks, 0);
    let mut rng = stream_rng(0, Stream::RandomPower, &[]);
    let again = p.evaluate(&oracle.best_position, PowerMode::Sca, &mut rng);
    assert!((again.objective - oracle.best_value).abs() <= 1e-6);
    let swarm = bpso(&p, PowerMode::Sca, &config.bpso, 0).unwrap();
    assert!(swarm.best_value <= oracle.best_value + 1e-6);
}
