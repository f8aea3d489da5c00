use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ofdma_alloc::harness::{golden_csv, run_experiment, write_csv, write_rows, ExperimentConfig};
use ofdma_alloc::Error;

#[derive(Parser)]
#[command(name = "ofdma-sim", version, about = "Monte-Carlo OFDMA resource-allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result rows as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Suppress the summary table on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the golden fixture, or regenerate it with --write.
    Golden {
        #[arg(long, default_value = "crates/core/tests/fixtures/golden.csv")]
        path: PathBuf,
        #[arg(long)]
        write: bool,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::ConfigParse(_) | Error::InvalidProfile(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_toml(&text)?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
            quiet,
        } => {
            let mut config = load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if threads == Some(0) {
                return Err(Failure::Config("--threads must be at least 1".into()));
            }
            let output = run_experiment(&config, threads)?;
            match out {
                Some(path) => write_csv(&path, &output.rows)?,
                None => write_rows(std::io::stdout().lock(), &output.rows)?,
            }
            if !quiet {
                eprint!("{}", output.summary);
            }
        }
        Command::Validate { config } => {
            let c = load(&config)?;
            println!(
                "ok: {} with {} trials, {} scheme pairs",
                c.scenario.label(),
                c.trials,
                c.schemes.len()
            );
        }
        Command::Golden { path, write } => {
            let fresh = golden_csv()?;
            if write {
                std::fs::write(&path, &fresh).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            } else {
                let stored =
                    std::fs::read_to_string(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
                if stored != fresh {
                    return Err(Failure::Runtime(format!(
                        "{} differs from a fresh run; pass --write to regenerate",
                        path.display()
                    )));
                }
                println!("{} matches", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
