#![allow(dead_code)]

use cellfree::adc_energy::{AdcProfile, SelectionTensor};
use cellfree::association::{select_users, selection_mask};
use cellfree::channel::{NetworkInstance, ScenarioConfig};
use cellfree::power::PosyRatioProblem;
use cellfree::rate::Coefficients;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn random_coefficients(k: usize, seed: u64) -> Coefficients {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta1 = Array2::zeros((k, k));
    let mut delta2 = Array2::zeros((k, k));
    let mut delta3 = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            delta1[[a, b]] = log_uniform(&mut rng, 1e-3, 1.0);
            delta2[[a, b]] = if rng.random_bool(0.5) {
                log_uniform(&mut rng, 1e-4, 0.1)
            } else {
                0.0
            };
            delta3[[a, b]] = if a == b {
                log_uniform(&mut rng, 0.1, 100.0)
            } else if rng.random_bool(0.3) {
                log_uniform(&mut rng, 1e-3, 10.0)
            } else {
                0.0
            };
        }
    }
    let lambda1 = (0..k).map(|_| log_uniform(&mut rng, 1e-2, 1.0)).collect();
    Coefficients {
        delta1,
        delta2,
        delta3,
        lambda1,
    }
}

/// Small user-centric drop with a random selection and random powers.
pub fn random_case(seed: u64, tau_p: usize) -> (NetworkInstance, AdcProfile, SelectionTensor, Vec<f64>) {
    let config = ScenarioConfig {
        num_aps: 4,
        num_users: 3,
        antennas_per_ap: 4,
        low_res_antennas: 3,
        users_per_ap: 2,
        pilot_samples: tau_p,
        coherence_samples: tau_p,
        rng_seed: seed,
        ..ScenarioConfig::default()
    };
    let instance = NetworkInstance::generate(&config).unwrap();
    let association = select_users(&instance.gamma, config.users_per_ap).unwrap();
    let mask = selection_mask(&association, config.antennas_per_ap);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let bits: Vec<bool> = (0..mask.len()).map(|_| rng.random::<bool>()).collect();
    let selection = SelectionTensor::from_mask_bits(&mask, &bits);
    let eta: Vec<f64> = (0..config.num_users).map(|_| rng.random_range(0.05..1.0)).collect();
    let profile = AdcProfile::mixed(config.num_aps, config.antennas_per_ap, config.low_res_antennas);
    (instance, profile, selection, eta)
}

/// Minimum of the ratio-product objective over a `points x points` grid on
/// `[0.01, 1]^2`, optionally with the solver floor added to each axis.
pub fn grid_minimum(problem: &PosyRatioProblem, points: usize, floor: Option<f64>) -> (f64, [f64; 2]) {
    let mut axis: Vec<f64> = (0..points)
        .map(|i| 0.01 + 0.99 * i as f64 / (points - 1) as f64)
        .collect();
    axis.extend(floor);
    let mut best = (f64::INFINITY, [1.0, 1.0]);
    for &a in &axis {
        for &b in &axis {
            let value = problem.objective(&[a, b]);
            if value < best.0 {
                best = (value, [a, b]);
            }
        }
    }
    best
}
