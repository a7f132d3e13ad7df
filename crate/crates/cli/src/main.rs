use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use thinspec_cli::config::{ConfigArgs, RunConfig};
use thinspec_cli::report::{error_json, to_json, write_json};
use thinspec_cli::validate::{run_all, Goldens};
use thinspec_cli::{expand, spectrum, sweep};

#[derive(Parser)]
#[command(name = "thinspec", version, about = "Dirichlet eigenvalues of thin domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Jet and expansion coefficients of one eigenvalue branch
    Expand(ConfigArgs),
    /// Compare the expansion with direct solves over a list of eps
    Sweep(ConfigArgs),
    /// Levels of the transverse oscillator and splitting matrices
    Spectrum(ConfigArgs),
    /// Run the acceptance suite
    Validate {
        /// Directory for validate.json (created if missing)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config(args: &ConfigArgs) -> Result<RunConfig> {
    RunConfig::from_settings(&args.settings()?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Expand(args) => {
            let cfg = config(&args)?;
            let report = expand::run(&cfg)?;
            if let Some(dir) = &cfg.out {
                write_json(dir, "expand.json", &report)?;
            }
            print!("{}", to_json(&report)?);
        }
        Command::Spectrum(args) => {
            let cfg = config(&args)?;
            let report = spectrum::run(&cfg)?;
            if let Some(dir) = &cfg.out {
                write_json(dir, "spectrum.json", &report)?;
            }
            print!("{}", to_json(&report)?);
        }
        Command::Sweep(args) => {
            let cfg = config(&args)?;
            let report = sweep::run(&cfg)?;
            match &cfg.out {
                Some(dir) => {
                    for p in sweep::write_outputs(&report, dir)? {
                        eprintln!("wrote {}", p.display());
                    }
                    print!("{}", sweep::csv_text(&report)?);
                }
                None => print!("{}", to_json(&report)?),
            }
        }
        Command::Validate { out } => {
            let report = run_all(&Goldens::default());
            for c in &report.criteria {
                println!("{}", c.line());
            }
            if let Some(dir) = &out {
                write_json(dir, "validate.json", &report)?;
            }
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprint!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}
