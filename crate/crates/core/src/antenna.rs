//! Antenna selection: binary particle swarm around per-particle power
//! control, random selection, and an exhaustive oracle for small networks.
//!
//! A candidate selection is a bit vector over the association mask, one bit
//! per `(m, n, k)` triple the mask allows. Bits outside the mask do not
//! exist in this representation, so they are zero by construction.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adc_energy::{ap_energy, cheapest_single_antenna, AdcProfile, EnergyConstants, Resolution, SelectionTensor};
use crate::association::SelectionMask;
use crate::channel::NetworkInstance;
use crate::error::{Error, Result};
use crate::power::{optimize_power, ScaOptions};
use crate::rate::Coefficients;
use crate::rng::{stream_rng, Stream};

/// How user powers are chosen for a candidate selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMode {
    /// Successive geometric programming from full power.
    Sca,
    /// Independent uniform draws on `[0, 1]`.
    Random,
}

/// Everything needed to score a selection bit vector.
#[derive(Clone, Debug)]
pub struct SelectionProblem<'a> {
    pub instance: &'a NetworkInstance,
    pub profile: &'a AdcProfile,
    pub mask: &'a SelectionMask,
    pub constants: EnergyConstants,
    pub budget_watt: f64,
    pub sca: ScaOptions,
}

/// Score of one candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Sum rate in bit/s/Hz, or `-inf` when the energy budget is violated.
    pub objective: f64,
    pub eta: Vec<f64>,
    pub energy_watt: f64,
    /// SCA failed and full power was used instead.
    pub sca_fallback: bool,
}

impl Evaluation {
    pub fn is_feasible(&self) -> bool {
        self.objective > f64::NEG_INFINITY
    }
}

impl<'a> SelectionProblem<'a> {
    pub fn num_bits(&self) -> usize {
        self.mask.len()
    }

    /// Antenna on/off states implied by `bits`, row-major `[m][n]`.
    pub fn antenna_states(&self, bits: &[bool]) -> Vec<bool> {
        let n_count = self.mask.antennas_per_ap;
        let mut states = vec![false; self.mask.num_aps * n_count];
        for (&(m, n, _), &on) in self.mask.triples.iter().zip(bits) {
            if on {
                states[m * n_count + n] = true;
            }
        }
        states
    }

    fn energy_of_states(&self, states: &[bool]) -> f64 {
        let n_count = self.mask.antennas_per_ap;
        states
            .chunks(n_count)
            .enumerate()
            .map(|(m, row)| {
                let res: Vec<Resolution> = self.profile.resolution.row(m).to_vec();
                ap_energy(row, &res, self.profile.low_res_antennas, &self.constants)
            })
            .sum()
    }

    pub fn energy(&self, bits: &[bool]) -> f64 {
        self.energy_of_states(&self.antenna_states(bits))
    }

    pub fn is_feasible(&self, bits: &[bool]) -> bool {
        self.energy(bits) < self.budget_watt
    }

    pub fn selection(&self, bits: &[bool]) -> SelectionTensor {
        SelectionTensor::from_mask_bits(self.mask, bits)
    }

    /// Scores `bits`; `rng` supplies the powers in [`PowerMode::Random`].
    pub fn evaluate(&self, bits: &[bool], mode: PowerMode, rng: &mut ChaCha8Rng) -> Evaluation {
        let k_count = self.instance.num_users();
        let eta_random: Option<Vec<f64>> =
            (mode == PowerMode::Random).then(|| (0..k_count).map(|_| rng.random::<f64>()).collect());
        let energy_watt = self.energy(bits);
        if energy_watt >= self.budget_watt {
            return Evaluation {
                objective: f64::NEG_INFINITY,
                eta: vec![0.0; k_count],
                energy_watt,
                sca_fallback: false,
            };
        }
        if !bits.iter().any(|&b| b) {
            return Evaluation {
                objective: 0.0,
                eta: eta_random.unwrap_or_else(|| vec![1.0; k_count]),
                energy_watt,
                sca_fallback: false,
            };
        }
        let coefficients = Coefficients::new(self.instance, self.profile, &self.selection(bits));
        let (eta, sca_fallback) = match eta_random {
            Some(eta) => (eta, false),
            None => match optimize_power(&coefficients, &self.sca) {
                Ok(outcome) => (outcome.eta, false),
                Err(e) => {
                    log::warn!("power control failed, using full power: {e}");
                    (vec![1.0; k_count], true)
                }
            },
        };
        Evaluation {
            objective: coefficients.sum_rate(&eta),
            eta,
            energy_watt,
            sca_fallback,
        }
    }
}

/// Rejection draws of Bernoulli(1/2) bits tried before falling back to repair.
pub const INIT_ATTEMPTS: usize = 200;

/// A uniformly random selection that meets the energy budget.
///
/// Draws i.i.d. fair bits on the mask up to `attempts` times. If every draw
/// is over budget, the last one is repaired by switching off randomly chosen
/// active antennas until it fits. Returns the bits and whether repair was
/// needed.
pub fn random_feasible_bits(
    problem: &SelectionProblem<'_>,
    rng: &mut ChaCha8Rng,
    attempts: usize,
) -> Result<(Vec<bool>, bool)> {
    let cheapest = cheapest_single_antenna(problem.profile, &problem.constants);
    if problem.budget_watt <= cheapest {
        return Err(Error::InfeasibleBudget {
            budget: problem.budget_watt,
            cheapest,
            attempts: 0,
        });
    }
    let mut bits = vec![false; problem.num_bits()];
    for _ in 0..attempts.max(1) {
        bits.iter_mut().for_each(|b| *b = rng.random::<bool>());
        if problem.is_feasible(&bits) {
            return Ok((bits, false));
        }
    }
    let n_count = problem.mask.antennas_per_ap;
    let states = problem.antenna_states(&bits);
    let mut active: Vec<usize> = (0..states.len()).filter(|&a| states[a]).collect();
    active.shuffle(rng);
    for antenna in active {
        for (bit, &(m, n, _)) in bits.iter_mut().zip(&problem.mask.triples) {
            if m * n_count + n == antenna {
                *bit = false;
            }
        }
        if problem.is_feasible(&bits) {
            break;
        }
    }
    debug_assert!(problem.is_feasible(&bits));
    Ok((bits, true))
}

/// One swarm member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub id: usize,
    pub position: Vec<bool>,
    pub velocity: Vec<f64>,
    pub local_best_position: Vec<bool>,
    pub local_best_value: f64,
    pub local_best_eta: Vec<f64>,
}

/// Swarm snapshot between iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<bool>,
    pub global_best_value: f64,
    pub global_best_eta: Vec<f64>,
    pub iteration: usize,
    pub max_iterations: usize,
    /// Particles whose initial draw had to be repaired to meet the budget.
    pub repaired_inits: usize,
}

impl SwarmState {
    pub fn inertia(&self) -> f64 {
        inertia(self.iteration, self.max_iterations)
    }
}

/// `0.9 - i (0.9 - 0.2) / I_max`.
pub fn inertia(iteration: usize, max_iterations: usize) -> f64 {
    0.9 - iteration as f64 * (0.9 - 0.2) / max_iterations as f64
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `T` particles with random feasible positions and zero velocity.
pub fn init_particles(
    problem: &SelectionProblem<'_>,
    num_particles: usize,
    max_iterations: usize,
    seed: u64,
) -> Result<SwarmState> {
    let k_count = problem.instance.num_users();
    let mut particles = Vec::with_capacity(num_particles);
    let mut repaired_inits = 0;
    for id in 0..num_particles {
        let mut rng = stream_rng(seed, Stream::SwarmInit, &[id as u64]);
        let (position, repaired) = random_feasible_bits(problem, &mut rng, INIT_ATTEMPTS)?;
        repaired_inits += usize::from(repaired);
        particles.push(Particle {
            id,
            velocity: vec![0.0; position.len()],
            local_best_position: position.clone(),
            position,
            local_best_value: f64::NEG_INFINITY,
            local_best_eta: vec![0.0; k_count],
        });
    }
    let global_best_position = particles.first().map(|p| p.position.clone()).unwrap_or_default();
    Ok(SwarmState {
        particles,
        global_best_position,
        global_best_value: f64::NEG_INFINITY,
        global_best_eta: vec![0.0; k_count],
        iteration: 0,
        max_iterations,
        repaired_inits,
    })
}

/// `V <- Omega V + psi1 (local - x) + psi2 (global - x)`, clamped to
/// `[-v_max, v_max]`, with `psi1, psi2 ~ U[0, 2]`.
pub fn velocity_update(particle: &mut Particle, global_best: &[bool], omega: f64, v_max: f64, rng: &mut ChaCha8Rng) {
    let psi1: f64 = rng.random_range(0.0..=2.0);
    let psi2: f64 = rng.random_range(0.0..=2.0);
    let bit = |b: bool| if b { 1.0 } else { 0.0 };
    let bits = particle
        .position
        .iter()
        .zip(&particle.local_best_position)
        .zip(global_best);
    for (v, ((&x, &local), &global)) in particle.velocity.iter_mut().zip(bits) {
        let x = bit(x);
        *v = (omega * *v + psi1 * (bit(local) - x) + psi2 * (bit(global) - x)).clamp(-v_max, v_max);
    }
}

/// Each bit becomes 1 with probability `sigmoid(V)`.
pub fn position_update(particle: &mut Particle, rng: &mut ChaCha8Rng) {
    for (bit, &v) in particle.position.iter_mut().zip(&particle.velocity) {
        *bit = rng.random::<f64>() < sigmoid(v);
    }
}

/// Swarm settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BpsoOptions {
    pub max_iterations: usize,
    pub num_particles: usize,
    /// Stop when the global best moves by at most this much.
    pub tolerance: f64,
    /// Consecutive iterations with a small move needed to stop. One
    /// reproduces a literal "stop when the best stops moving" rule, which
    /// ends most runs after two or three iterations.
    pub patience: usize,
    pub v_max: f64,
}

impl Default for BpsoOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            num_particles: 10,
            tolerance: 1e-4,
            patience: 10,
            v_max: 6.0,
        }
    }
}

/// Best selection found by the swarm and how it got there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpsoOutcome {
    pub best_position: Vec<bool>,
    pub best_eta: Vec<f64>,
    pub best_value: f64,
    /// Global best after each iteration.
    pub trace: Vec<f64>,
    /// Objective of every particle at every iteration.
    pub particle_values: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Particle evaluations, including cache hits.
    pub evaluations: usize,
    /// Power-control solves actually run.
    pub sca_calls: usize,
    pub sca_fallbacks: usize,
    pub repaired_inits: usize,
    /// Iteration at which the final global best was first reached.
    pub best_found_at: usize,
}

/// Binary particle swarm over selections with power control per particle.
pub fn bpso(problem: &SelectionProblem<'_>, mode: PowerMode, options: &BpsoOptions, seed: u64) -> Result<BpsoOutcome> {
    assert!(options.max_iterations >= 1 && options.num_particles >= 1);
    let mut swarm = init_particles(problem, options.num_particles, options.max_iterations, seed)?;
    let cache: Mutex<HashMap<Vec<bool>, Evaluation>> = Mutex::new(HashMap::new());
    let mut trace = Vec::with_capacity(options.max_iterations);
    let mut particle_values = Vec::with_capacity(options.max_iterations);
    let mut evaluations = 0;
    let mut sca_calls = 0;
    let mut sca_fallbacks = 0;
    let mut small_moves = 0;
    let mut best_found_at = 0;

    for i in 0..options.max_iterations {
        swarm.iteration = i;
        let results: Vec<(Evaluation, bool)> = swarm
            .particles
            .par_iter()
            .map(|p| {
                let mut rng = stream_rng(seed, Stream::RandomPower, &[i as u64, p.id as u64]);
                if mode == PowerMode::Sca {
                    if let Some(hit) = cache.lock().expect("cache lock").get(&p.position) {
                        return (hit.clone(), false);
                    }
                }
                let eval = problem.evaluate(&p.position, mode, &mut rng);
                let solved = mode == PowerMode::Sca && eval.is_feasible() && p.position.iter().any(|&b| b);
                if mode == PowerMode::Sca {
                    cache
                        .lock()
                        .expect("cache lock")
                        .insert(p.position.clone(), eval.clone());
                }
                (eval, solved)
            })
            .collect();

        let mut values = Vec::with_capacity(results.len());
        for (particle, (eval, solved)) in swarm.particles.iter_mut().zip(results) {
            evaluations += 1;
            sca_calls += usize::from(solved);
            sca_fallbacks += usize::from(solved && eval.sca_fallback);
            values.push(eval.objective);
            if eval.objective > particle.local_best_value {
                particle.local_best_value = eval.objective;
                particle.local_best_position = particle.position.clone();
                particle.local_best_eta = eval.eta;
            }
        }
        for particle in &swarm.particles {
            if particle.local_best_value > swarm.global_best_value {
                swarm.global_best_value = particle.local_best_value;
                swarm.global_best_position = particle.local_best_position.clone();
                swarm.global_best_eta = particle.local_best_eta.clone();
                best_found_at = i;
            }
        }
        particle_values.push(values);
        trace.push(swarm.global_best_value);

        if i > 0 {
            let delta = (trace[i] - trace[i - 1]).abs();
            small_moves = if delta <= options.tolerance { small_moves + 1 } else { 0 };
            if small_moves >= options.patience {
                break;
            }
        }
        if i + 1 == options.max_iterations {
            break;
        }

        let omega = swarm.inertia();
        let global = swarm.global_best_position.clone();
        swarm.particles.par_iter_mut().for_each(|p| {
            let mut rng = stream_rng(seed, Stream::Velocity, &[i as u64, p.id as u64]);
            velocity_update(p, &global, omega, options.v_max, &mut rng);
            let mut rng = stream_rng(seed, Stream::Position, &[i as u64, p.id as u64]);
            position_update(p, &mut rng);
        });
    }

    Ok(BpsoOutcome {
        best_position: swarm.global_best_position,
        best_eta: swarm.global_best_eta,
        best_value: swarm.global_best_value,
        iterations: trace.len(),
        trace,
        particle_values,
        evaluations,
        sca_calls,
        sca_fallbacks,
        repaired_inits: swarm.repaired_inits,
        best_found_at,
    })
}

/// Writes `iteration,global_best,particle_0,...` rows.
pub fn write_bpso_trace_csv<W: Write>(outcome: &BpsoOutcome, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let t = outcome.particle_values.first().map_or(0, Vec::len);
    let mut header = vec!["iteration".to_string(), "global_best".to_string()];
    header.extend((0..t).map(|p| format!("particle_{p}")));
    w.write_record(&header)?;
    for (i, (best, values)) in outcome.trace.iter().zip(&outcome.particle_values).enumerate() {
        let mut row = vec![i.to_string(), format!("{best:.12e}")];
        row.extend(values.iter().map(|v| format!("{v:.12e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Hard cap on `M * N * K` for exhaustive search.
pub const EXHAUSTIVE_CAP: usize = 20;

/// Optimum over every selection on the mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveOutcome {
    pub best_position: Vec<bool>,
    pub best_eta: Vec<f64>,
    pub best_value: f64,
    /// `2^(M N K)`, the size of the unrestricted space.
    pub unmasked_count: u64,
    /// `2^|mask|` selections actually enumerated.
    pub enumerated: u64,
    pub feasible_count: u64,
    pub sca_fallbacks: u64,
}

/// Enumerates every selection on the mask, keeps the energy-feasible ones,
/// runs power control on each and returns the best (lowest index on ties).
pub fn exhaustive_search(problem: &SelectionProblem<'_>) -> Result<ExhaustiveOutcome> {
    let full = problem.mask.full_size();
    if full > EXHAUSTIVE_CAP {
        return Err(Error::ExhaustiveTooLarge {
            size: full,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let bits_len = problem.num_bits();
    let enumerated = 1u64 << bits_len;
    let decode = |index: u64| -> Vec<bool> { (0..bits_len).map(|j| index >> j & 1 == 1).collect() };

    const CHUNK: u64 = 4096;
    let chunks = enumerated.div_ceil(CHUNK);
    type Best = (f64, u64, Vec<f64>);
    let partials: Vec<(Option<Best>, u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            // Powers are deterministic here; the generator is never read.
            let mut rng = stream_rng(0, Stream::RandomPower, &[]);
            let mut best: Option<Best> = None;
            let mut feasible = 0;
            let mut fallbacks = 0;
            for index in c * CHUNK..((c + 1) * CHUNK).min(enumerated) {
                let bits = decode(index);
                if !problem.is_feasible(&bits) {
                    continue;
                }
                feasible += 1;
                let eval = problem.evaluate(&bits, PowerMode::Sca, &mut rng);
                fallbacks += u64::from(eval.sca_fallback);
                if best.as_ref().is_none_or(|b| eval.objective > b.0) {
                    best = Some((eval.objective, index, eval.eta));
                }
            }
            (best, feasible, fallbacks)
        })
        .collect();

    let mut best: Option<Best> = None;
    let mut feasible_count = 0;
    let mut sca_fallbacks = 0;
    for (candidate, feasible, fallbacks) in partials {
        feasible_count += feasible;
        sca_fallbacks += fallbacks;
        if let Some(c) = candidate {
            if best.as_ref().is_none_or(|b| c.0 > b.0) {
                best = Some(c);
            }
        }
    }
    let (best_value, index, best_eta) = best.ok_or_else(|| Error::InfeasibleBudget {
        budget: problem.budget_watt,
        cheapest: cheapest_single_antenna(problem.profile, &problem.constants),
        attempts: 0,
    })?;
    Ok(ExhaustiveOutcome {
        best_position: decode(index),
        best_eta,
        best_value,
        unmasked_count: 1u64 << full,
        enumerated,
        feasible_count,
        sca_fallbacks,
    })
}

/// Selection tensor as nested `[m][n][k]` 0/1 arrays.
pub fn selection_json(selection: &SelectionTensor) -> serde_json::Value {
    let (m_count, n_count, k_count) = selection.dim();
    let nested: Vec<Vec<Vec<u8>>> = (0..m_count)
        .map(|m| {
            (0..n_count)
                .map(|n| (0..k_count).map(|k| u8::from(selection.get(m, n, k))).collect())
                .collect()
        })
        .collect();
    serde_json::json!({ "shape": [m_count, n_count, k_count], "d": nested })
}
