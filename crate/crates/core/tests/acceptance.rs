//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use cellfree::adc_energy::{ap_energy, max_system_energy, AdcProfile, EnergyConstants, SelectionTensor};
use cellfree::experiments::{
    oracle_study, paired_one_sided_p, rate_check_config, sweep, validate_rate, Axis, ExperimentConfig, Scheme,
};
use cellfree::power::{condense, optimize_power, sca_loop, PosyRatioProblem, Posynomial, ScaOptions};
use cellfree::rate::{closed_form_terms, lambda_direct, rate_terms};
use common::{grid_minimum, log_uniform, random_case, random_coefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn issues(list: &[String]) -> String {
    if list.is_empty() {
        String::new()
    } else {
        format!("; {}", list.join("; "))
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn theorem_terms_match_monte_carlo() -> Outcome {
    let base = ExperimentConfig::default();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for pilots in [3, 2] {
        let config = rate_check_config(&base, pilots);
        let checks = validate_rate(&config, 100_000, 0).map_err(|e| e.to_string())?;
        for c in checks
            .iter()
            .filter(|c| matches!(c.term.as_str(), "ds2" | "bu_iui" | "gn" | "qn"))
        {
            worst = worst.max(c.z_score());
            if c.z_score() > 3.0 {
                lines.push(format!(
                    "tau_p={pilots} user {} {} off by {:.2} SE",
                    c.user,
                    c.term,
                    c.z_score()
                ));
            }
        }
    }
    check(
        lines.is_empty(),
        format!(
            "worst deviation {worst:.2} SE over 24 terms at 1e5 draws{}",
            issues(&lines)
        ),
    )
}

fn appendix_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (inst, profile, sel, eta) = random_case(seed, if seed % 2 == 0 { 3 } else { 2 });
        let breakdown = rate_terms(&inst, &profile, &sel, &eta).map_err(|e| e.to_string())?;
        let direct = lambda_direct(&inst, &profile, &sel, &eta);
        for (k, &lambda) in direct.iter().enumerate() {
            let terms = closed_form_terms(&inst, &profile, &sel, &eta, k);
            worst = worst
                .max(rel_err(terms.lambda(), lambda))
                .max(rel_err(breakdown.lambda_den[k], lambda));
        }
    }
    check(
        worst <= 1e-12,
        format!("largest relative error {worst:.2e} on 100 instances"),
    )
}

fn condensation_and_monotone_sca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst_touch: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..=8);
        let mut g = Posynomial::new(n);
        for i in 0..n {
            g.push_linear(log_uniform(&mut rng, 1e-3, 1e3), Some(i));
        }
        g.push_linear(log_uniform(&mut rng, 1e-3, 1e3), None);
        let at: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, 1e-4, 1.0)).collect();
        let m = condense(&g, &at).map_err(|e| e.to_string())?;
        worst_touch = worst_touch.max(rel_err(m.eval(&at), g.eval(&at)));
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, 1e-6, 1e2)).collect();
            if m.eval(&x) > g.eval(&x) * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    let mut worst_rise = f64::NEG_INFINITY;
    for seed in 0..100 {
        let k = 1 + (seed as usize % 8);
        let problem = PosyRatioProblem::new(random_coefficients(k, 1000 + seed));
        let out = sca_loop(&problem, &vec![1.0; k], &ScaOptions::default()).map_err(|e| e.to_string())?;
        for w in out.trace.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
    }
    check(
        violations == 0 && worst_touch <= 1e-10 && worst_rise <= 1e-8,
        format!(
            "{violations} bound violations in 2e5 points, touch error {worst_touch:.1e}, largest SCA rise {worst_rise:.1e}"
        ),
    )
}

fn grid_oracle() -> Outcome {
    let mut passed = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for seed in 0..20 {
        let coefficients = random_coefficients(2, 2000 + seed);
        let problem = PosyRatioProblem::new(coefficients.clone());
        let out = optimize_power(&coefficients, &ScaOptions::default()).map_err(|e| e.to_string())?;
        let sca = problem.objective(&out.eta_raw);
        let (grid, _) = grid_minimum(&problem, 100, None);
        worst_gap = worst_gap.max(sca - grid);
        passed += usize::from(sca <= grid + 1e-3);
    }
    check(
        passed == 20,
        format!("{passed}/20 within 1e-3 of the 100x100 grid, largest excess {worst_gap:.2e}"),
    )
}

fn exhaustive_reproduction() -> Outcome {
    let config = ExperimentConfig::default();
    let started = Instant::now();
    let mut attained = 0;
    let mut max_calls = 0;
    let mut problems = Vec::new();
    let mut feasible = Vec::new();
    for seed in 0..10 {
        let r = oracle_study(&config, 0.75, seed).map_err(|e| e.to_string())?;
        if r.unmasked_count != 262_144 {
            problems.push(format!("seed {seed}: unmasked count {}", r.unmasked_count));
        }
        if r.bpso_sum_rate > r.oracle_sum_rate + 1e-6 {
            problems.push(format!("seed {seed}: swarm beats oracle"));
        }
        attained += usize::from(r.attainment >= 0.98);
        max_calls = max_calls.max(r.bpso_sca_calls);
        feasible.push(r.feasible_count);
    }
    feasible.dedup();
    check(
        problems.is_empty() && attained >= 8 && max_calls <= 500,
        format!(
            "2^18 = 262144 enumerated, >=98% of optimum in {attained}/10 seeds, at most {max_calls} SCA calls, \
             feasible selections {feasible:?} (reference figure 114624), {:.0} s{}",
            started.elapsed().as_secs_f64(),
            issues(&problems)
        ),
    )
}

fn trends() -> Outcome {
    let base = ExperimentConfig::default();
    let seeds: Vec<u64> = (0..20).collect();
    let schemes = [Scheme::UcBpsoScaGp, Scheme::UcRasRpc];
    let best = Scheme::UcBpsoScaGp;
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    let mut worst_p: f64 = 0.0;

    let cases = [
        (Axis::M, vec![20.0, 30.0, 40.0, 50.0], -1.0, false),
        (Axis::K, vec![4.0, 6.0, 8.0], 1.0, false),
        (Axis::L, vec![2.0, 3.0, 5.0], -1.0, true),
    ];
    for (axis, values, direction, effective) in cases {
        let result = sweep(&base, axis, &values, &schemes, 0.75, &seeds).map_err(|e| e.to_string())?;
        let means: Vec<f64> = values
            .iter()
            .map(|&v| {
                let s = result.summary_for(v, best).expect("summary cell");
                if effective {
                    s.effective_sum_rate_mean
                } else {
                    s.sree_mean
                }
            })
            .collect();
        if !means.windows(2).all(|w| direction * (w[1] - w[0]) > 0.0) {
            problems.push(format!("{axis} trend {means:?}"));
        }
        notes.push(format!(
            "{axis}: {}",
            means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" ")
        ));
        for &v in &values {
            let a: Vec<f64> = result.cell(v, best).iter().map(|r| r.sree).collect();
            let b: Vec<f64> = result.cell(v, Scheme::UcRasRpc).iter().map(|r| r.sree).collect();
            let p = paired_one_sided_p(&a, &b);
            worst_p = worst_p.max(p);
            let (ma, mb) = (mean(&a), mean(&b));
            if !(ma >= mb && p < 0.05) {
                problems.push(format!("{axis}={v}: BPSO {ma:.3} vs RAS {mb:.3}, p {p:.3}"));
            }
        }
    }
    check(
        problems.is_empty(),
        format!(
            "{}; BPSO over RAS worst p {worst_p:.1e}{}",
            notes.join(", "),
            issues(&problems)
        ),
    )
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn energy_model() -> Outcome {
    let constants = EnergyConstants::default();
    let profile = AdcProfile::mixed(1, 4, 3);
    let res = profile.resolution.row(0).to_vec();
    let full = ap_energy(&[true; 4], &res, 3, &constants);
    let single = ap_energy(&[true, false, false, false], &res, 3, &constants);
    let off = ap_energy(&[false; 4], &res, 3, &constants);
    let max = max_system_energy(&profile, &constants);
    let hand_ok = (full - 0.12532).abs() <= 1e-15 && (single - 6e-5).abs() <= 1e-18 && off == 0.0 && max == full;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut sel = SelectionTensor::zeros(4, 4, 5);
    let mut inconsistent = 0;
    for _ in 0..10_000 {
        let (m, n, k) = (rng.random_range(0..4), rng.random_range(0..4), rng.random_range(0..5));
        sel.set(m, n, k, rng.random_bool(0.4));
        inconsistent += usize::from(!sel.state_is_consistent());
    }
    check(
        hand_ok && inconsistent == 0,
        format!("full {full:.5} W, single 1-bit {single:.0e} W, off {off} W; {inconsistent} inconsistent states in 1e4 mutations"),
    )
}

fn cli_determinism() -> Outcome {
    let invocations: [&[&str]; 3] = [
        &["run", "--scheme", "UC-BPSO-SCA-GP", "--seed", "17"],
        &[
            "sweep", "--axis", "K", "--values", "4,8", "--seeds", "3", "--seed", "17",
        ],
        &["validate-rate", "--trials", "5000", "--seed", "17"],
    ];
    let mut compared = 0;
    for args in invocations {
        let dirs = [
            tempfile::tempdir().map_err(|e| e.to_string())?,
            tempfile::tempdir().map_err(|e| e.to_string())?,
        ];
        for dir in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_cellfree"))
                .args(args)
                .arg("--out")
                .arg(dir.path())
                .env("RUST_LOG", "warn")
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{args:?} exited with {status}"));
            }
        }
        for entry in std::fs::read_dir(dirs[0].path()).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            if !name.to_string_lossy().ends_with(".csv") {
                continue;
            }
            let a = std::fs::read(dirs[0].path().join(&name)).map_err(|e| e.to_string())?;
            let b = std::fs::read(dirs[1].path().join(&name)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{args:?}: {} differs", name.to_string_lossy()));
            }
            compared += 1;
        }
    }
    check(
        compared >= 4,
        format!("{compared} CSV files byte-identical across repeated runs"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("closed-form rate terms vs Monte Carlo", theorem_terms_match_monte_carlo),
        ("term aggregation identity", appendix_identity),
        ("condensation bound and SCA monotonicity", condensation_and_monotone_sca),
        ("two-user grid oracle", grid_oracle),
        ("exhaustive search vs swarm", exhaustive_reproduction),
        ("sweep trends", trends),
        ("energy model", energy_model),
        ("CLI determinism", cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| label.ends_with(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{label} PASS ({name}, {secs:.1} s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{label} FAIL ({name}, {secs:.1} s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
