use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dualreach::cli::{self, RunConfig};

#[derive(Parser)]
#[command(name = "dualreach", version, about = "Train, roll out, smooth and evaluate dual-arm reaching policies")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML); the planar testbed defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write checkpoint, score CSV and score curve.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides the configured episode count.
        #[arg(long)]
        episodes: Option<usize>,
        /// Resume from this checkpoint instead of a fresh initialization.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Greedy rollout of a trained policy in a scene drawn from the seed.
    Rollout {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Smooth a trajectory CSV joint by joint.
    Smooth {
        /// Trajectory CSV with header t,q0,...
        trajectory: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Scene JSON written by `rollout`; defaults to the config's static obstacles.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        precision: Option<f64>,
    },
    /// Aggregate greedy performance over seeded scenes.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
    },
}

fn config(common: &Common) -> dualreach::Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(command: Command) -> dualreach::Result<()> {
    match command {
        Command::Train {
            common,
            episodes,
            checkpoint,
        } => {
            let cfg = config(&common)?;
            let out = cli::cmd_train(&cfg, common.seed, &common.out, episodes, checkpoint.as_deref())?;
            let tail = &out.log[out.log.len().saturating_sub(100)..];
            let success = tail.iter().filter(|r| r.success).count();
            println!(
                "trained {} episodes; last {} successes: {success}; wrote {}",
                out.log.len(),
                tail.len(),
                common.out.display()
            );
        }
        Command::Rollout { common, checkpoint } => {
            let cfg = config(&common)?;
            let summary = cli::cmd_rollout(&cfg, &checkpoint, common.seed, &common.out)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("plain data"));
        }
        Command::Smooth {
            trajectory,
            common,
            scene,
            precision,
        } => {
            let cfg = config(&common)?;
            let outcome = cli::cmd_smooth(&cfg, &trajectory, scene.as_deref(), precision, &common.out)?;
            println!("joint  p_opt       roughness before -> after");
            for r in &outcome.reports {
                println!(
                    "{:5}  {:.6}  {:.6e} -> {:.6e}",
                    r.joint, r.p_opt, r.roughness_before, r.roughness_after
                );
            }
        }
        Command::Eval {
            common,
            checkpoint,
            episodes,
        } => {
            let cfg = config(&common)?;
            let metrics = cli::cmd_eval(&cfg, &checkpoint, episodes, common.seed, Some(&common.out))?;
            println!("{}", serde_json::to_string_pretty(&metrics).expect("plain data"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
