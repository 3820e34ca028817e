use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rwlm_cli::commands::{self, Overrides};
use rwlm_cli::config::ExperimentConfig;
use rwlm_cli::{CliError, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_PASS};

#[derive(Parser)]
#[command(name = "rwlm", version, about = "Random walks with local memory: samplers, walks and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample spanning trees or WSF+ configurations.
    SampleForest(Common),
    /// Run walk trials and write a statistics report.
    RunWalk(Common),
    /// Run the configured mechanism checks.
    Verify(Common),
    /// Write the expanded multigraph of a hidden mechanism.
    ConvertHidden(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.trials (or forest.samples).
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides run.n_steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Overrides output.path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one CSV per trial (run-walk).
    #[arg(long)]
    emit_trajectories: bool,
}

type Runner = fn(&ExperimentConfig, bool) -> Result<commands::Outcome, CliError>;

fn run(cli: Cli) -> Result<bool, CliError> {
    let (common, cmd): (&Common, Runner) = match &cli.command {
        Command::SampleForest(c) => (c, |cfg, _| commands::sample_forest(cfg)),
        Command::RunWalk(c) => (c, commands::run_walk),
        Command::Verify(c) => (c, |cfg, _| commands::verify(cfg)),
        Command::ConvertHidden(c) => (c, |cfg, _| commands::convert_hidden(cfg)),
    };
    let mut cfg = ExperimentConfig::from_file(&common.config)?;
    Overrides {
        seed: common.seed,
        trials: common.trials,
        steps: common.steps,
        out: common.out.clone(),
        emit_trajectories: common.emit_trajectories,
    }
    .apply(&mut cfg)?;
    let outcome = cmd(&cfg, common.emit_trajectories)?;
    println!(
        "{} {} (manifest {})",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.dir.display(),
        outcome.manifest_hash
    );
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
