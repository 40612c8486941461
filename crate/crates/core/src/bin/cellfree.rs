use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cellfree::experiments::{
    code_version, convergence_study, oracle_study, rate_check_config, run_scheme, sweep, validate_rate, write_csv,
    Axis, ExperimentConfig, Manifest, Scheme,
};
use cellfree::power::write_trace_csv;
use cellfree::Result;

#[derive(Parser)]
#[command(version, about = "User-centric cell-free massive MIMO with mixed-resolution ADCs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV and the run manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed (first seed when several are used).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on one drop.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "UC-BPSO-SCA-GP")]
        scheme: Scheme,
        #[arg(long, default_value_t = 0.75)]
        budget_fraction: f64,
    },
    /// Sweep one system parameter across schemes and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scheme to include; repeat for several. Defaults to all six.
        #[arg(long)]
        scheme: Vec<Scheme>,
        #[arg(long, default_value_t = 0.75)]
        budget_fraction: f64,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// M, K, kappa or L.
        #[arg(long, default_value = "M")]
        axis: Axis,
        #[arg(long, value_delimiter = ',', default_value = "20,30,40,50")]
        values: Vec<f64>,
    },
    /// Dump the swarm's global-best trace for several sizes.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.75)]
        budget_fraction: f64,
        /// M or K.
        #[arg(long, default_value = "M")]
        axis: Axis,
        #[arg(long, value_delimiter = ',', default_value = "20,30,40,50")]
        values: Vec<f64>,
    },
    /// Exhaustive search against the swarm on the three-AP toy network.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.75)]
        budget_fraction: f64,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Check the closed-form rate terms against Monte Carlo.
    ValidateRate {
        #[command(flatten)]
        common: Common,
        /// Pilot length; 3 gives orthogonal pilots, 2 forces reuse.
        #[arg(long, default_value_t = 3)]
        pilots: usize,
        /// Channel draws; defaults to the configured count.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    match &common.config {
        Some(path) => ExperimentConfig::from_json_file(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_rows<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<String> {
    fs::create_dir_all(dir)?;
    write_csv(rows, BufWriter::new(File::create(dir.join(name))?))?;
    Ok(name.to_string())
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    let file = BufWriter::new(File::create(dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(file, manifest)?;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            common,
            scheme,
            budget_fraction,
        } => {
            let config = load(&common)?;
            let out = run_scheme(&config, scheme, budget_fraction, common.seed)?;
            let mut outputs = vec![write_rows(&common.out, "run.csv", std::slice::from_ref(&out.record))?];
            write_trace_csv(&out.trace, BufWriter::new(File::create(common.out.join("trace.csv"))?))?;
            outputs.push("trace.csv".into());
            let detail = BufWriter::new(File::create(common.out.join("selection.json"))?);
            serde_json::to_writer(
                detail,
                &serde_json::json!({ "eta": out.eta, "selection": out.selection }),
            )?;
            outputs.push("selection.json".into());
            log::info!(
                "{scheme} seed {}: SREE {:.6e} in {:.2} s",
                common.seed,
                out.record.sree,
                out.wall_time_s
            );
            write_manifest(
                &common.out,
                &Manifest {
                    command: "run".into(),
                    code_version: code_version(),
                    config,
                    seeds: vec![common.seed],
                    budget_fraction: Some(budget_fraction),
                    schemes: vec![scheme],
                    outputs,
                },
            )
        }
        Command::Sweep {
            common,
            scheme,
            budget_fraction,
            seeds,
            axis,
            values,
        } => {
            let config = load(&common)?;
            let schemes = if scheme.is_empty() {
                Scheme::ALL.to_vec()
            } else {
                scheme
            };
            let seed_list: Vec<u64> = (0..seeds).map(|s| common.seed + s).collect();
            let result = sweep(&config, axis, &values, &schemes, budget_fraction, &seed_list)?;
            let outputs = vec![
                write_rows(&common.out, "sweep.csv", &result.records)?,
                write_rows(&common.out, "summary.csv", &result.summary)?,
            ];
            write_manifest(
                &common.out,
                &Manifest {
                    command: format!("sweep {axis}"),
                    code_version: code_version(),
                    config,
                    seeds: seed_list,
                    budget_fraction: Some(budget_fraction),
                    schemes,
                    outputs,
                },
            )
        }
        Command::Converge {
            common,
            budget_fraction,
            axis,
            values,
        } => {
            let config = load(&common)?;
            let rows = convergence_study(&config, axis, &values, budget_fraction, common.seed)?;
            let outputs = vec![write_rows(&common.out, "convergence.csv", &rows)?];
            write_manifest(
                &common.out,
                &Manifest {
                    command: format!("converge {axis}"),
                    code_version: code_version(),
                    config,
                    seeds: vec![common.seed],
                    budget_fraction: Some(budget_fraction),
                    schemes: vec![Scheme::UcBpsoScaGp],
                    outputs,
                },
            )
        }
        Command::Oracle {
            common,
            budget_fraction,
            seeds,
        } => {
            let config = load(&common)?;
            let seed_list: Vec<u64> = (0..seeds).map(|s| common.seed + s).collect();
            let mut rows = Vec::new();
            for &seed in &seed_list {
                let record = oracle_study(&config, budget_fraction, seed)?;
                log::info!(
                    "seed {seed}: oracle {:.6} swarm {:.6} ({} feasible of {})",
                    record.oracle_sum_rate,
                    record.bpso_sum_rate,
                    record.feasible_count,
                    record.unmasked_count
                );
                rows.push(record);
            }
            let outputs = vec![write_rows(&common.out, "oracle.csv", &rows)?];
            write_manifest(
                &common.out,
                &Manifest {
                    command: "oracle".into(),
                    code_version: code_version(),
                    config,
                    seeds: seed_list,
                    budget_fraction: Some(budget_fraction),
                    schemes: vec![Scheme::UcBpsoScaGp],
                    outputs,
                },
            )
        }
        Command::ValidateRate { common, pilots, trials } => {
            let config = rate_check_config(&load(&common)?, pilots);
            let checks = validate_rate(&config, trials.unwrap_or(config.mc_trials), common.seed)?;
            let worst = checks.iter().map(|c| c.z_score()).fold(0.0, f64::max);
            log::info!("largest deviation {worst:.2} standard errors");
            let outputs = vec![write_rows(&common.out, "rate_terms.csv", &checks)?];
            write_manifest(
                &common.out,
                &Manifest {
                    command: "validate-rate".into(),
                    code_version: code_version(),
                    config,
                    seeds: vec![common.seed],
                    budget_fraction: None,
                    schemes: Vec::new(),
                    outputs,
                },
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut message = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(inner) = source {
                message.push_str(&format!(": {inner}"));
                source = inner.source();
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
