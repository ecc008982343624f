use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smartsched_harness::{run, Command, ExperimentConfig};

/// Downlink scheduling lab: train and evaluate schedulers, record traces,
/// and search offline Pareto fronts.
#[derive(Parser)]
#[command(name = "smartsched", version)]
struct Cli {
    /// Experiment configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set env.num_ues=8`.
    #[arg(long = "set", value_name = "PATH=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train an A2C agent.
    Train,
    /// Evaluate a checkpoint greedily against the baseline.
    Eval,
    /// Compare two schedulers on paired or independent episodes.
    Compare,
    /// Offline multi-objective search over a recorded trace.
    Pareto,
    /// Record a trace from the live environment.
    TraceRecord,
    /// Run a scheduler on a recorded trace.
    TraceReplay,
    /// Check analytic gradients against finite differences.
    Gradcheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Cmd::Train => Command::Train,
        Cmd::Eval => Command::Eval,
        Cmd::Compare => Command::Compare,
        Cmd::Pareto => Command::Pareto,
        Cmd::TraceRecord => Command::TraceRecord,
        Cmd::TraceReplay => Command::TraceReplay,
        Cmd::Gradcheck => Command::Gradcheck,
    };
    let result = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)
        .and_then(|cfg| run(cmd, &cfg));
    match result {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
