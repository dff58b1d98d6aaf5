use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mfbandit_core::cli::{cmd_diagnose, cmd_mfe, cmd_run, cmd_table, parse_seeds, TableOptions};
use mfbandit_core::export::ExportOptions;
use mfbandit_core::{GameConfig, RewardKind};

#[derive(Parser)]
#[command(name = "mfbandit", version, about = "Mean-field multi-agent bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a config once per seed and export the traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated seeds or ranges, e.g. `1-4,9`; defaults to the config seed.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
        /// Add a centered moving average of the population fractions.
        #[arg(long, value_name = "WINDOW", num_args = 0..=1, default_missing_value = "50")]
        moving_average: Option<usize>,
    },
    /// Mean regret and cumulative reward over seeds for the table parameters.
    Table {
        #[arg(long, default_value = "general")]
        reward: RewardKind,
        /// Use the non-contraction parameters.
        #[arg(long)]
        non_contraction: bool,
        /// Population sizes.
        #[arg(long = "agents", value_delimiter = ',', default_value = "50,100,200")]
        agents: Vec<usize>,
        #[arg(long, default_value_t = 6)]
        runs: usize,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value_t = mfbandit_core::cli::TABLE_HORIZON)]
        horizon: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Solve for the equilibrium from several random starts.
    Mfe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// One run plus every diagnostic against the mean-field model.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn seeds_or(text: Option<&str>, default: impl FnOnce() -> Result<Vec<u64>>) -> Result<Vec<u64>> {
    match text {
        Some(t) => Ok(parse_seeds(t)?),
        None => default(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            workers,
            moving_average,
        } => {
            let seeds = seeds_or(seeds.as_deref(), || {
                let c = GameConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
                Ok(vec![c.seed])
            })?;
            let runs = cmd_run(&config, &seeds, &out, workers, ExportOptions { moving_average })?;
            for r in runs {
                println!(
                    "seed {}: mean regret {:.3}, cumulative reward {:.3}",
                    r.seed, r.mean_regret, r.cumulative_reward
                );
            }
        }
        Command::Table {
            reward,
            non_contraction,
            agents,
            runs,
            seeds,
            horizon,
            out,
            workers,
        } => {
            let options = TableOptions {
                num_agents: agents,
                runs,
                seeds: seeds.as_deref().map(parse_seeds).transpose()?,
                horizon,
                workers,
                ..TableOptions::new(reward, !non_contraction)
            };
            for c in cmd_table(&options, &out)? {
                println!(
                    "{} N={}: regret {:.3}, rewards {:.3} over {} runs",
                    c.reward, c.num_agents, c.regret, c.rewards, c.runs
                );
            }
        }
        Command::Mfe {
            config,
            starts,
            out,
            workers,
        } => {
            let report = cmd_mfe(&config, starts, &out, workers)?;
            let converged = report.starts.iter().filter(|s| s.solution.converged).count();
            println!(
                "{converged}/{} starts converged, {} distinct fixed point(s)",
                report.starts.len(),
                report.clusters.len()
            );
        }
        Command::Diagnose { config, seed, out } => {
            let report = cmd_diagnose(&config, seed, &out)?;
            for c in &report.checks {
                println!("{}: {} (margin {:.3e})", c.check, if c.pass { "pass" } else { "fail" }, c.margin);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
