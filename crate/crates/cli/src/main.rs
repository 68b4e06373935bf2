use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use safeguard_core::harness::{self, RunConfig, OUT_DIR_ENV};
use safeguard_core::locomotion::RewardWeights;
use safeguard_core::orchestra::Outcome;
use safeguard_core::worldsim::load_scenario;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "safeguard", version, about = "Run hazard-response scenarios and emit reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario. Exits 0, 1 or 2 for Success, Partial or Failure.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "SAFEGUARD_SEED", default_value_t = 0)]
        seed: u64,
        /// JSON run overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// `rules` or `process:<command>`; overrides the config file.
        #[arg(long)]
        backend: Option<String>,
    },
    /// Run seeds 0..N for every scenario in a directory and print the outcome table.
    Batch {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the table and per-run reports here.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Capture thermal baselines from a scenario's hazard-free start and save the memory stores.
    BaselineCapture {
        scenario: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Per-step reward decomposition of a JSON-Lines locomotion trace, as CSV on stdout.
    ReplayRewards {
        trace: PathBuf,
        /// JSON reward weights; defaults apply when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            config,
            out,
            backend,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if backend.is_some() {
                cfg.backend = backend;
            }
            let dir = harness::resolve_out_dir(out.as_deref());
            let report = harness::run(&scenario, seed, &cfg, &dir)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(ExitCode::from(match report.outcome {
                Outcome::Success => 0,
                Outcome::Partial => 1,
                Outcome::Failure => 2,
            }))
        }
        Command::Batch {
            scenarios,
            seeds,
            config,
            out,
        } => {
            let cfg = load_config(config.as_ref())?;
            let set = harness::load_scenario_dir(&scenarios)?;
            anyhow::ensure!(!set.is_empty(), "no scenario files in {}", scenarios.display());
            let table = harness::batch(&set, seeds, &cfg)?;
            let csv = harness::batch_csv(&table);
            print!("{csv}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
                std::fs::write(dir.join("batch.csv"), &csv)?;
                std::fs::write(dir.join("batch.json"), serde_json::to_string_pretty(&table)? + "\n")?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::BaselineCapture { scenario, out } => {
            let sc = load_scenario(&scenario)?;
            let store = harness::baseline_capture(&sc)?;
            let dir = harness::resolve_out_dir(out.as_deref());
            std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
            let path = dir.join(format!("{}_memory.json", sc.id));
            store.save(&path)?;
            println!("{}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ReplayRewards { trace, weights } => {
            let w = match weights {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| p.display().to_string())?;
                    serde_json::from_str(&text).with_context(|| p.display().to_string())?
                }
                None => RewardWeights::default(),
            };
            let text = std::fs::read_to_string(&trace).with_context(|| trace.display().to_string())?;
            print!("{}", harness::replay_rewards(&text, &w)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
