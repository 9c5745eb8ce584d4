use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tgnoon::config::list_experiments;
use tgnoon::{resolve, run_experiment, write_run, Experiment, Overrides, RunError};

#[derive(Parser)]
#[command(name = "tgnoon", version, about = "NOON-state preparation experiments on a rotating ring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-particle spectrum sweep.
    Spectrum(RunArgs),
    /// CRAB pulse optimization.
    Crab(RunArgs),
    /// Shortcut-to-adiabaticity protocol.
    Sta(RunArgs),
    /// Many-body fidelity between reference orbital sets.
    #[command(name = "tg-fidelity")]
    TgFidelity(RunArgs),
    /// Plain time evolution.
    Propagate(RunArgs),
    /// Run whatever experiment the config file names in `kind`.
    Run(RunArgs),
    /// List experiments and their parameters.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent runs inside one experiment.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn execute(kind: Option<Experiment>, args: RunArgs) -> Result<(), RunError> {
    let file = match &args.config {
        Some(path) => Some(std::fs::read_to_string(path)?),
        None => None,
    };
    let cfg = resolve(
        kind,
        &Overrides {
            file,
            sets: args.sets,
            seed: args.seed,
            out: args.out,
        },
    )?;
    log::info!("running {} with seed {}", cfg.kind, cfg.seed());
    let artifacts = run_experiment(&cfg, args.threads)?;
    for path in write_run(&cfg, &artifacts)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            return ExitCode::SUCCESS;
        }
        Command::Spectrum(a) => (Some(Experiment::Spectrum), a),
        Command::Crab(a) => (Some(Experiment::Crab), a),
        Command::Sta(a) => (Some(Experiment::Sta), a),
        Command::TgFidelity(a) => (Some(Experiment::TgFidelity), a),
        Command::Propagate(a) => (Some(Experiment::Propagate), a),
        Command::Run(a) => (None, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
