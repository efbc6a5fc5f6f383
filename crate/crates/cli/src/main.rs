use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use dynsamp_cli::config::ExperimentConfig;
use dynsamp_cli::error::CliError;
use dynsamp_cli::presets::{preset_config, Preset};
use dynsamp_cli::report::ExperimentReport;
use dynsamp_cli::{execute, exit_code, render, summary, write_report, Format, RunOptions};

#[derive(Parser)]
#[command(name = "dynsamp", version, about = "Frame checks for operator orbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a JSON config.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Override the general tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Run independent checks concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Run a curated preset.
    Repro {
        preset: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn run(cli: Cli) -> Result<ExperimentReport, CliError> {
    let mut opts = RunOptions::from_env();
    match cli.command {
        Command::Run {
            config,
            out,
            format,
            tol,
            parallel,
        } => {
            opts.tol = tol;
            opts.parallel = parallel;
            let report = execute(ExperimentConfig::load(&config)?, &opts)?;
            write_report(&report, &out, format)?;
            Ok(report)
        }
        Command::Repro {
            preset,
            dim,
            seed,
            out,
            format,
        } => {
            let preset: Preset = preset.parse()?;
            let report = execute(preset_config(preset, dim, seed)?, &opts)?;
            match out {
                Some(path) => write_report(&report, &path, format)?,
                None => print!("{}", render(&report, format)?),
            }
            Ok(report)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(report) => {
            eprint!("{}", summary(&report));
            ExitCode::from(exit_code(&report) as u8)
        }
        Err(e) => {
            eprintln!("dynsamp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
