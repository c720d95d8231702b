use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::commands::{cmd_compare, cmd_evaluate, cmd_oracle, cmd_sweep, cmd_train};
use super::config::{ExperimentConfig, Overrides};
use super::ExperimentError;

#[derive(Parser, Debug)]
#[command(name = "orbitsplit", version, about = "CU/DU split placement experiments for hybrid NTN O-RAN")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML experiment config; defaults are used for anything not set.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Agent seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training episodes.
    #[arg(long)]
    episodes: Option<usize>,
    /// Traffic trace CSV (`step,time_of_day_h,lambda_ru_mbps`).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the DQN agent.
    Train(Common),
    /// Roll out a checkpoint greedily on the held-out trace.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint JSON written by `train`
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Per-step power-minimizing oracle and DP-optimal trajectories.
    Oracle(Common),
    /// Compare a checkpoint with the DP and myopic oracles.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Checkpoint JSON written by `train`
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train once per seed in `run.sweep_seeds`.
    Sweep(Common),
}

fn resolve(common: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        out: common.out.clone(),
        episodes: common.episodes,
        trace: common.trace.clone(),
    });
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Train(c) => cmd_train(&resolve(&c)?)?.print(),
        Command::Evaluate { common, checkpoint } => {
            let s = cmd_evaluate(&resolve(&common)?, &checkpoint)?;
            println!("episodes: {} ({} steps)", s.episodes, s.steps);
            println!("mean reward: {:.4}, mean discounted return: {:.4}", s.mean_reward, s.mean_discounted_return);
            println!("negative reward fraction: {:.4}", s.negative_fraction);
            println!("mean normalized power: {:.4} (normalizer {:.4} W)", s.mean_normalized_power, s.normalizer_w);
        }
        Command::Oracle(c) => {
            let s = cmd_oracle(&resolve(&c)?)?;
            let chosen: Vec<String> = s.chosen.iter().map(|c| c.to_string()).collect();
            println!("steps: {} ({} infeasible)", s.steps, s.infeasible_steps);
            println!("myopic oracle choices: {}", chosen.join(", "));
            println!("mean normalized power: {:.4} (normalizer {:.4} W)", s.mean_normalized_power, s.normalizer_w);
            println!("DP windows: {}, mean optimal return {:.4}", s.dp_windows, s.mean_dp_return);
        }
        Command::Compare { common, checkpoint } => {
            let r = cmd_compare(&resolve(&common)?, &checkpoint)?;
            println!("agent return: {:.4}, DP-optimal return: {:.4}", r.agent_return, r.dp_return);
            println!("optimality gap: {:.2}%", 100.0 * r.optimality_gap);
            println!(
                "mean normalized power: agent {:.4}, myopic oracle {:.4}",
                r.agent_mean_normalized_power, r.myopic_mean_normalized_power
            );
            println!("hour  mode-split  mean-split");
            for h in &r.hours {
                let mode = h.mode_split.map_or("-".to_string(), |o| o.to_string());
                let mean = h.mean_split.map_or("-".to_string(), |m| format!("{m:.2}"));
                println!("{:>4}  {:>10}  {:>10}", h.hour, mode, mean);
            }
        }
        Command::Sweep(c) => {
            for s in cmd_sweep(&resolve(&c)?)? {
                println!(
                    "seed {}: long-term reward {:.4}, normalized power {:.4}, gap {}",
                    s.seed,
                    s.final_long_term_reward,
                    s.mean_normalized_power,
                    s.optimality_gap.map_or("-".to_string(), |g| format!("{:.2}%", 100.0 * g))
                );
            }
        }
    }
    Ok(())
}

/// Parse `args`, run the subcommand and return the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
