//! Scheme runs, parameter sweeps and the studies behind the command line.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::adc_energy::{max_system_energy, system_energy, AdcProfile, EnergyConstants};
use crate::antenna::{
    bpso, exhaustive_search, random_feasible_bits, BpsoOptions, BpsoOutcome, PowerMode, SelectionProblem, INIT_ATTEMPTS,
};
use crate::association::{select_users, selection_mask, Association, SelectionMask};
use crate::channel::{NetworkInstance, ScenarioConfig};
use crate::error::{Error, Result};
use crate::power::{optimize_power, GpOptions, ScaOptions};
use crate::rate::{effective_sum_rate, sree, validate_terms, Coefficients, TermCheck};
use crate::rng::{stream_rng, Stream};

/// Everything a study needs besides the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub energy: EnergyConstants,
    pub sca: ScaOptions,
    /// Power control inside the exhaustive oracle, looser to keep it fast.
    pub oracle_sca: ScaOptions,
    pub bpso: BpsoOptions,
    /// Report SREE in bit/s/W instead of bit/s/Hz/W.
    pub sree_per_second: bool,
    pub mc_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            energy: EnergyConstants::default(),
            sca: ScaOptions::default(),
            oracle_sca: ScaOptions {
                gp: GpOptions {
                    tolerance: 1e-7,
                    ..GpOptions::default()
                },
                ..ScaOptions::default()
            },
            bpso: BpsoOptions::default(),
            sree_per_second: false,
            mc_trials: 100_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// How a scheme picks antennas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AntennaMode {
    Bpso,
    Random,
    AllOn,
}

/// The compared transmission schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "UC-BPSO-SCA-GP")]
    UcBpsoScaGp,
    #[serde(rename = "UC-RAS-RPC")]
    UcRasRpc,
    #[serde(rename = "UC-RAS-SCA-GP")]
    UcRasScaGp,
    #[serde(rename = "UC-BPSO-RPC")]
    UcBpsoRpc,
    #[serde(rename = "CF-SCA-GP")]
    CfScaGp,
    #[serde(rename = "CF-RPC")]
    CfRpc,
}

/// A scheme's antenna rule, power rule and association.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub name: Scheme,
    pub antenna_mode: AntennaMode,
    pub power_mode: PowerMode,
    pub user_centric: bool,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::UcBpsoScaGp,
        Scheme::UcRasRpc,
        Scheme::UcRasScaGp,
        Scheme::UcBpsoRpc,
        Scheme::CfScaGp,
        Scheme::CfRpc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::UcBpsoScaGp => "UC-BPSO-SCA-GP",
            Scheme::UcRasRpc => "UC-RAS-RPC",
            Scheme::UcRasScaGp => "UC-RAS-SCA-GP",
            Scheme::UcBpsoRpc => "UC-BPSO-RPC",
            Scheme::CfScaGp => "CF-SCA-GP",
            Scheme::CfRpc => "CF-RPC",
        }
    }

    pub fn spec(self) -> SchemeSpec {
        let (antenna_mode, power_mode, user_centric) = match self {
            Scheme::UcBpsoScaGp => (AntennaMode::Bpso, PowerMode::Sca, true),
            Scheme::UcRasRpc => (AntennaMode::Random, PowerMode::Random, true),
            Scheme::UcRasScaGp => (AntennaMode::Random, PowerMode::Sca, true),
            Scheme::UcBpsoRpc => (AntennaMode::Bpso, PowerMode::Random, true),
            Scheme::CfScaGp => (AntennaMode::AllOn, PowerMode::Sca, false),
            Scheme::CfRpc => (AntennaMode::AllOn, PowerMode::Random, false),
        };
        SchemeSpec {
            name: self,
            antenna_mode,
            power_mode,
            user_centric,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let known: Vec<&str> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::InvalidConfig(format!("unknown scheme {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

/// One scheme run, as written to CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub seed: u64,
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas_per_ap: usize,
    pub low_res_antennas: usize,
    pub users_per_ap: usize,
    pub budget_fraction: f64,
    pub sum_rate: f64,
    pub energy_watt: f64,
    pub budget_watt: f64,
    /// Independent re-check of the energy budget on the reported selection.
    pub feasible: bool,
    pub sree: f64,
    pub effective_sum_rate: f64,
    pub active_antennas: usize,
    pub iterations: usize,
    pub sca_calls: usize,
}

/// A run with the artifacts that do not fit a CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub record: RunRecord,
    pub eta: Vec<f64>,
    pub selection: serde_json::Value,
    /// Global best per swarm iteration, or the power-control objective trace.
    pub trace: Vec<f64>,
    pub wall_time_s: f64,
}

/// Scenario, association and mask for one seed.
pub struct Prepared {
    pub scenario: ScenarioConfig,
    pub instance: NetworkInstance,
    pub association: Association,
    pub mask: SelectionMask,
    pub profile: AdcProfile,
    pub max_energy_watt: f64,
}

/// Users per AP actually used: `L` cannot exceed `K`.
pub fn effective_users_per_ap(scenario: &ScenarioConfig) -> usize {
    scenario.users_per_ap.min(scenario.num_users)
}

pub fn prepare(config: &ExperimentConfig, user_centric: bool, seed: u64) -> Result<Prepared> {
    let mut scenario = config.scenario.clone();
    scenario.rng_seed = seed;
    scenario.users_per_ap = effective_users_per_ap(&scenario);
    let instance = NetworkInstance::generate(&scenario)?;
    let association = if user_centric {
        select_users(&instance.gamma, scenario.users_per_ap)?
    } else {
        Association::cell_free(scenario.num_aps, scenario.num_users)
    };
    let mask = selection_mask(&association, scenario.antennas_per_ap);
    let profile = AdcProfile::mixed(scenario.num_aps, scenario.antennas_per_ap, scenario.low_res_antennas);
    let max_energy_watt = max_system_energy(&profile, &config.energy);
    Ok(Prepared {
        scenario,
        instance,
        association,
        mask,
        profile,
        max_energy_watt,
    })
}

/// Budget for a fraction of the all-on energy. The tiny relative slack lets
/// a fraction of exactly one admit the all-on selection under the strict
/// `E < budget` test.
pub fn budget_watt(max_energy_watt: f64, fraction: f64) -> f64 {
    fraction * max_energy_watt * (1.0 + 1e-9)
}

fn replay(seed: u64, context: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::Replay {
        context: context.to_string(),
        seed,
        source: Box::new(e),
    }
}

/// Runs one scheme on the drop keyed by `seed`.
pub fn run_scheme(config: &ExperimentConfig, scheme: Scheme, budget_fraction: f64, seed: u64) -> Result<RunOutput> {
    let started = Instant::now();
    let spec = scheme.spec();
    let context = format!("{scheme} run failed");
    let prep = prepare(config, spec.user_centric, seed).map_err(replay(seed, &context))?;
    let budget = budget_watt(prep.max_energy_watt, budget_fraction);
    let problem = SelectionProblem {
        instance: &prep.instance,
        profile: &prep.profile,
        mask: &prep.mask,
        constants: config.energy,
        budget_watt: budget,
        sca: config.sca,
    };

    let k_count = prep.scenario.num_users;
    let mut power_rng = stream_rng(seed, Stream::RandomPower, &[u64::MAX]);
    let (bits, eta, trace, iterations, sca_calls) = match spec.antenna_mode {
        AntennaMode::Bpso => {
            let BpsoOutcome {
                best_position,
                best_eta,
                trace,
                iterations,
                sca_calls,
                ..
            } = bpso(&problem, spec.power_mode, &config.bpso, seed).map_err(replay(seed, &context))?;
            (best_position, best_eta, trace, iterations, sca_calls)
        }
        AntennaMode::Random | AntennaMode::AllOn => {
            let bits = if spec.antenna_mode == AntennaMode::Random {
                let mut rng = stream_rng(seed, Stream::RandomSelection, &[]);
                random_feasible_bits(&problem, &mut rng, INIT_ATTEMPTS)
                    .map_err(replay(seed, &context))?
                    .0
            } else {
                vec![true; prep.mask.len()]
            };
            let coefficients = Coefficients::new(&prep.instance, &prep.profile, &problem.selection(&bits));
            match spec.power_mode {
                PowerMode::Random => {
                    let eta = (0..k_count).map(|_| rand::Rng::random::<f64>(&mut power_rng)).collect();
                    (bits, eta, Vec::new(), 0, 0)
                }
                PowerMode::Sca => {
                    let outcome = optimize_power(&coefficients, &config.sca).map_err(replay(seed, &context))?;
                    let iterations = outcome.iterations;
                    (bits, outcome.eta, outcome.trace, iterations, 1)
                }
            }
        }
    };

    let selection = problem.selection(&bits);
    let report = system_energy(&selection, &prep.profile, &config.energy, budget);
    let coefficients = Coefficients::new(&prep.instance, &prep.profile, &selection);
    let sum_rate = coefficients.sum_rate(&eta);
    let mut efficiency = sree(sum_rate, &report).unwrap_or(0.0);
    if config.sree_per_second {
        efficiency *= prep.scenario.bandwidth_hz;
    }
    let record = RunRecord {
        scheme,
        seed,
        num_aps: prep.scenario.num_aps,
        num_users: k_count,
        antennas_per_ap: prep.scenario.antennas_per_ap,
        low_res_antennas: prep.scenario.low_res_antennas,
        users_per_ap: prep.association.max_load(),
        budget_fraction,
        sum_rate,
        energy_watt: report.total_watt,
        budget_watt: budget,
        feasible: report.feasible,
        sree: efficiency,
        effective_sum_rate: effective_sum_rate(sum_rate, prep.association.max_load().max(1)),
        active_antennas: selection.antenna_state().iter().filter(|&&on| on).count(),
        iterations,
        sca_calls,
    };
    Ok(RunOutput {
        record,
        eta,
        selection: crate::antenna::selection_json(&selection),
        trace,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    M,
    K,
    /// Fraction of high-resolution antennas, `N2 / N`, with `N` fixed.
    Kappa,
    L,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m" => Ok(Axis::M),
            "k" => Ok(Axis::K),
            "kappa" => Ok(Axis::Kappa),
            "l" => Ok(Axis::L),
            _ => Err(Error::InvalidConfig(format!(
                "unknown axis {s:?}; expected M, K, kappa or L"
            ))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::M => "M",
            Axis::K => "K",
            Axis::Kappa => "kappa",
            Axis::L => "L",
        })
    }
}

/// Applies one axis value to a scenario.
pub fn apply_axis(scenario: &mut ScenarioConfig, axis: Axis, value: f64) -> Result<()> {
    let count = || -> Result<usize> {
        if value >= 1.0 && value.fract() == 0.0 {
            Ok(value as usize)
        } else {
            Err(Error::InvalidConfig(format!(
                "{axis} must be a positive integer (got {value})"
            )))
        }
    };
    match axis {
        Axis::M => scenario.num_aps = count()?,
        Axis::K => scenario.num_users = count()?,
        Axis::L => scenario.users_per_ap = count()?,
        Axis::Kappa => {
            let n = scenario.antennas_per_ap as f64;
            let high = (value * n).round();
            if !(0.0..=n).contains(&high) || ((high / n) - value).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "kappa {value} is not a multiple of 1/{n} in [0, 1]"
                )));
            }
            scenario.low_res_antennas = scenario.antennas_per_ap - high as usize;
        }
    }
    Ok(())
}

/// Mean and two-sided 95% Student-t half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub half_width: f64,
}

impl Interval {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Self { mean, half_width: 0.0 };
        }
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid degrees of freedom");
        Self {
            mean,
            half_width: t.inverse_cdf(0.975) * (var / n).sqrt(),
        }
    }
}

/// p-value of the paired one-sided t-test of `mean(a - b) > 0`.
pub fn paired_one_sided_p(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid degrees of freedom");
    1.0 - dist.cdf(t)
}

/// Summary of one (point, scheme) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub axis: Axis,
    pub value: f64,
    pub scheme: Scheme,
    pub num_seeds: usize,
    pub sree_mean: f64,
    pub sree_half_width: f64,
    pub effective_sum_rate_mean: f64,
    pub effective_sum_rate_half_width: f64,
    pub infeasible_runs: usize,
}

/// Per-seed sweep records plus per-cell summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    /// Ordered by value, then scheme, then seed.
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SweepSummaryRow>,
}

/// A run record tagged with its sweep point, flattened for CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub axis: Axis,
    pub value: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub num_aps: usize,
    pub num_users: usize,
    pub antennas_per_ap: usize,
    pub low_res_antennas: usize,
    pub users_per_ap: usize,
    pub budget_fraction: f64,
    pub sum_rate: f64,
    pub energy_watt: f64,
    pub budget_watt: f64,
    pub feasible: bool,
    pub sree: f64,
    pub effective_sum_rate: f64,
    pub active_antennas: usize,
    pub iterations: usize,
    pub sca_calls: usize,
}

impl SweepRecord {
    pub fn new(axis: Axis, value: f64, run: RunRecord) -> Self {
        Self {
            axis,
            value,
            scheme: run.scheme,
            seed: run.seed,
            num_aps: run.num_aps,
            num_users: run.num_users,
            antennas_per_ap: run.antennas_per_ap,
            low_res_antennas: run.low_res_antennas,
            users_per_ap: run.users_per_ap,
            budget_fraction: run.budget_fraction,
            sum_rate: run.sum_rate,
            energy_watt: run.energy_watt,
            budget_watt: run.budget_watt,
            feasible: run.feasible,
            sree: run.sree,
            effective_sum_rate: run.effective_sum_rate,
            active_antennas: run.active_antennas,
            iterations: run.iterations,
            sca_calls: run.sca_calls,
        }
    }
}

impl SweepResult {
    pub fn cell(&self, value: f64, scheme: Scheme) -> Vec<&SweepRecord> {
        self.records
            .iter()
            .filter(|r| r.value == value && r.scheme == scheme)
            .collect()
    }

    pub fn summary_for(&self, value: f64, scheme: Scheme) -> Option<&SweepSummaryRow> {
        self.summary.iter().find(|s| s.value == value && s.scheme == scheme)
    }
}

/// Every `(value, scheme, seed)` combination, seeds shared across schemes
/// so comparisons can be paired.
pub fn sweep(
    config: &ExperimentConfig,
    axis: Axis,
    values: &[f64],
    schemes: &[Scheme],
    budget_fraction: f64,
    seeds: &[u64],
) -> Result<SweepResult> {
    let mut jobs = Vec::new();
    for &value in values {
        let mut point = config.clone();
        apply_axis(&mut point.scenario, axis, value)?;
        for &scheme in schemes {
            for &seed in seeds {
                jobs.push((value, point.clone(), scheme, seed));
            }
        }
    }
    let records: Vec<SweepRecord> = jobs
        .par_iter()
        .map(|(value, point, scheme, seed)| {
            run_scheme(point, *scheme, budget_fraction, *seed).map(|out| SweepRecord::new(axis, *value, out.record))
        })
        .collect::<Result<_>>()?;

    let mut summary = Vec::new();
    for &value in values {
        for &scheme in schemes {
            let cell: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.value == value && r.scheme == scheme)
                .collect();
            let sree: Vec<f64> = cell.iter().map(|r| r.sree).collect();
            let esr: Vec<f64> = cell.iter().map(|r| r.effective_sum_rate).collect();
            let s = Interval::from_samples(&sree);
            let e = Interval::from_samples(&esr);
            summary.push(SweepSummaryRow {
                axis,
                value,
                scheme,
                num_seeds: cell.len(),
                sree_mean: s.mean,
                sree_half_width: s.half_width,
                effective_sum_rate_mean: e.mean,
                effective_sum_rate_half_width: e.half_width,
                infeasible_runs: cell.iter().filter(|r| !r.feasible).count(),
            });
        }
    }
    Ok(SweepResult {
        axis,
        values: values.to_vec(),
        schemes: schemes.to_vec(),
        seeds: seeds.to_vec(),
        records,
        summary,
    })
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<W: Write, T: Serialize>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a convergence trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub axis: Axis,
    pub value: f64,
    pub seed: u64,
    pub iteration: usize,
    pub global_best: f64,
}

/// Swarm traces of the optimized user-centric scheme for each axis value.
pub fn convergence_study(
    config: &ExperimentConfig,
    axis: Axis,
    values: &[f64],
    budget_fraction: f64,
    seed: u64,
) -> Result<Vec<TraceRow>> {
    let runs: Vec<(f64, RunOutput)> = values
        .par_iter()
        .map(|&value| {
            let mut point = config.clone();
            apply_axis(&mut point.scenario, axis, value)?;
            Ok((value, run_scheme(&point, Scheme::UcBpsoScaGp, budget_fraction, seed)?))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (value, out) in runs {
        for pair in out.trace.windows(2) {
            assert!(pair[1] >= pair[0], "global-best trace must not decrease");
        }
        rows.extend(out.trace.iter().enumerate().map(|(iteration, &global_best)| TraceRow {
            axis,
            value,
            seed,
            iteration,
            global_best,
        }));
    }
    Ok(rows)
}

/// The small network on which exhaustive search is affordable: three
/// two-antenna APs (one 1-bit, one high resolution), three users, every AP
/// serving every user.
pub fn oracle_config(base: &ExperimentConfig) -> ExperimentConfig {
    let mut config = base.clone();
    config.scenario.num_aps = 3;
    config.scenario.antennas_per_ap = 2;
    config.scenario.low_res_antennas = 1;
    config.scenario.num_users = 3;
    config.scenario.users_per_ap = 3;
    config
}

/// Exhaustive optimum against the swarm on the same drop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub seed: u64,
    pub budget_fraction: f64,
    pub oracle_sum_rate: f64,
    pub bpso_sum_rate: f64,
    /// `bpso / oracle`.
    pub attainment: f64,
    pub unmasked_count: u64,
    pub enumerated: u64,
    pub feasible_count: u64,
    pub bpso_evaluations: usize,
    pub bpso_sca_calls: usize,
    pub bpso_iterations: usize,
    /// First iteration at which the swarm held its final best.
    pub bpso_best_found_at: usize,
    /// Power-control failures replaced by full power, oracle plus swarm.
    pub sca_fallbacks: u64,
    /// Swarm result re-scored with the oracle's power-control settings.
    pub oracle_rescored_bpso: f64,
}

/// Runs the exhaustive oracle and the swarm on the toy network for `seed`.
pub fn oracle_study(config: &ExperimentConfig, budget_fraction: f64, seed: u64) -> Result<OracleRecord> {
    let config = oracle_config(config);
    let context = "oracle study failed";
    let prep = prepare(&config, true, seed).map_err(replay(seed, context))?;
    let budget = budget_watt(prep.max_energy_watt, budget_fraction);
    let mut problem = SelectionProblem {
        instance: &prep.instance,
        profile: &prep.profile,
        mask: &prep.mask,
        constants: config.energy,
        budget_watt: budget,
        sca: config.oracle_sca,
    };
    let oracle = exhaustive_search(&problem).map_err(replay(seed, context))?;
    problem.sca = config.sca;
    let swarm = bpso(&problem, PowerMode::Sca, &config.bpso, seed).map_err(replay(seed, context))?;
    problem.sca = config.oracle_sca;
    let mut rng = stream_rng(seed, Stream::RandomPower, &[]);
    let oracle_rescored_bpso = problem
        .evaluate(&swarm.best_position, PowerMode::Sca, &mut rng)
        .objective;
    Ok(OracleRecord {
        seed,
        budget_fraction,
        oracle_sum_rate: oracle.best_value,
        bpso_sum_rate: swarm.best_value,
        attainment: if oracle.best_value > 0.0 {
            swarm.best_value / oracle.best_value
        } else {
            1.0
        },
        unmasked_count: oracle.unmasked_count,
        enumerated: oracle.enumerated,
        feasible_count: oracle.feasible_count,
        bpso_evaluations: swarm.evaluations,
        bpso_sca_calls: swarm.sca_calls,
        bpso_iterations: swarm.iterations,
        bpso_best_found_at: swarm.best_found_at,
        sca_fallbacks: oracle.sca_fallbacks + swarm.sca_fallbacks as u64,
        oracle_rescored_bpso,
    })
}

/// The small network used to check the closed-form terms by simulation.
pub fn rate_check_config(base: &ExperimentConfig, pilot_samples: usize) -> ExperimentConfig {
    let mut config = base.clone();
    let s = &mut config.scenario;
    s.num_aps = 4;
    s.antennas_per_ap = 4;
    s.low_res_antennas = 3;
    s.num_users = 3;
    s.users_per_ap = 2;
    s.pilot_samples = pilot_samples;
    s.coherence_samples = s.coherence_samples.max(pilot_samples);
    config
}

/// Closed-form terms against Monte Carlo on a drop with a random selection
/// on the user-centric mask and random powers.
pub fn validate_rate(config: &ExperimentConfig, trials: usize, seed: u64) -> Result<Vec<TermCheck>> {
    let prep = prepare(config, true, seed)?;
    let mut rng = stream_rng(seed, Stream::RandomSelection, &[]);
    let bits: Vec<bool> = (0..prep.mask.len())
        .map(|_| rand::Rng::random::<bool>(&mut rng))
        .collect();
    let selection = crate::adc_energy::SelectionTensor::from_mask_bits(&prep.mask, &bits);
    let mut rng = stream_rng(seed, Stream::RandomPower, &[]);
    let eta: Vec<f64> = (0..prep.scenario.num_users)
        .map(|_| rand::Rng::random_range(&mut rng, 0.05..=1.0))
        .collect();
    validate_terms(&prep.instance, &prep.profile, &selection, &eta, trials, seed)
}

/// JSON manifest written next to every CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub budget_fraction: Option<f64>,
    pub schemes: Vec<Scheme>,
    pub outputs: Vec<String>,
}

pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}
