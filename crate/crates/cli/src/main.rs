use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxshape_cli::config::Command;
use maxshape_cli::{commands, threads_from_env, validate_config, CliError, DiagnosticKind, RunConfig};

#[derive(Parser)]
#[command(name = "maxshape", version, about = "Minimize maxitive set functionals over curve networks of fixed length")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the optimizer seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// No progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the command named in the config.
    Run,
    /// Anneal a network and audit it.
    Solve,
    /// Evaluate a functional on a given network.
    Evaluate,
    /// Density audit of a network or a solver result.
    Audit,
    /// Run the functional property battery.
    Properties,
    /// Write the built-in regularity fixtures and their densities.
    Fixtures,
    /// Check a config without running it.
    Validate,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let (Some(seed), Some(opt)) = (cli.seed, cfg.optimizer.as_mut()) {
        opt.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    if let Some(n) = threads_from_env()? {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let command = match cli.command {
        Sub::Validate => {
            let Some(path) = &cli.config else { return Err(CliError::Missing("--config")) };
            let diags = validate_config(path, None);
            for d in &diags {
                println!("{d}");
            }
            return Ok(if diags.iter().any(|d| d.kind == DiagnosticKind::Fatal) {
                1
            } else if diags.is_empty() {
                0
            } else {
                2
            });
        }
        Sub::Run => None,
        Sub::Solve => Some(Command::Solve),
        Sub::Evaluate => Some(Command::Evaluate),
        Sub::Audit => Some(Command::Audit),
        Sub::Properties => Some(Command::Properties),
        Sub::Fixtures => Some(Command::Fixtures),
    };
    let cfg = load(cli)?;
    let command = command.or(cfg.command).ok_or(CliError::NoCommand)?;
    Ok(commands::run(&cfg, command, cli.quiet)?.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
