//! `voltfair` — train and evaluate smart-inverter control scenarios on a
//! radial LV feeder.
//!
//! Exit codes: 0 on success, 2 for configuration/input errors, 3 for
//! numeric failures (divergence, NaN losses).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use voltfair_core::error::Error;
use voltfair_core::feeder::generate_feeder;
use voltfair_core::grid::{save_network, save_timeseries};
use voltfair_core::metrics::ScenarioSummary;
use voltfair_core::runner::{compare_scenarios, load_config, run_scenario, RunConfig, Scenario};

#[derive(Parser)]
#[command(name = "voltfair", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario: train (b/c/d) and evaluate on the held-out split.
    Run {
        /// Flat key = value config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario a, b, c, or d (overrides the config file).
        #[arg(long)]
        scenario: Option<String>,
        /// Master seed (overrides the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Training episodes (overrides the config file).
        #[arg(long)]
        episodes: Option<usize>,
        /// Output directory (overrides the config file).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluation worker threads (overrides the config file).
        #[arg(long)]
        parallel_eval: Option<usize>,
    },
    /// Compare summary.json files from runs over the same evaluation range.
    Compare {
        /// Run output directories (each containing summary.json).
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Generate a synthetic feeder (network file plus profile CSV).
    GenFeeder {
        #[arg(long)]
        customers: usize,
        #[arg(long)]
        seed: u64,
        /// Days of 15-minute profiles (365 reproduces a full year).
        #[arg(long, default_value_t = 365)]
        days: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) | Error::NotConverged | Error::EmptyBatch => 3,
        _ => 2,
    }
}

fn dispatch() -> voltfair_core::Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            scenario,
            seed,
            episodes,
            out,
            parallel_eval,
        } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => RunConfig::default(),
            };
            if let Some(s) = scenario {
                cfg.scenario = s.parse::<Scenario>()?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = episodes {
                cfg.episodes = e;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if let Some(p) = parallel_eval {
                cfg.parallel_eval = p;
            }
            let output = run_scenario(&cfg)?;
            print!("{}", std::fs::read_to_string(&output.artifacts.summary_txt)?);
            println!("artifacts written to {}", output.artifacts.out_dir.display());
            Ok(())
        }
        Command::Compare { inputs } => {
            let mut summaries = Vec::new();
            for dir in &inputs {
                let path = dir.join("summary.json");
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let summary: ScenarioSummary = serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                summaries.push(summary);
            }
            let refs: Vec<&ScenarioSummary> = summaries.iter().collect();
            print!("{}", compare_scenarios(&refs)?);
            Ok(())
        }
        Command::GenFeeder {
            customers,
            seed,
            days,
            out,
        } => {
            let (spec, series, inverters) = generate_feeder(customers, days, seed)?;
            std::fs::create_dir_all(&out)?;
            let network = out.join("network.txt");
            let profiles = out.join("profiles.csv");
            save_network(&network, &spec, &inverters)?;
            save_timeseries(&profiles, &spec, &series)?;
            println!(
                "wrote {} ({} buses) and {} ({} steps)",
                network.display(),
                spec.n_buses(),
                profiles.display(),
                series.n_steps
            );
            Ok(())
        }
    }
}
