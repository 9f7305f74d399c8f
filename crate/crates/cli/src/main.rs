use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ghomog::harness::{self, ExperimentConfig, HarnessError};

/// Run, check and list front-propagation experiments.
#[derive(Parser)]
#[command(name = "ghomog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV + JSON results.
    Run {
        config: PathBuf,
        /// Output directory; defaults to $GHOMOG_OUT, then ./ghomog-out.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the worker count of the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and print it with every default applied.
    Validate { config: PathBuf },
    /// List experiment kinds and their parameters.
    List {
        #[arg(long)]
        json: bool,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        HarnessError::Config(harness::ConfigError {
            field: "config".into(),
            reason: format!("cannot read {}: {e}", path.display()),
        })
    })?;
    Ok(ExperimentConfig::from_toml(&text)?)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { config, out, workers } => {
            let mut cfg = load(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let dir = out.unwrap_or_else(harness::output_dir);
            let s = harness::run(&cfg, &dir)?;
            let csv = s.csv.clone().unwrap_or_default();
            println!(
                "{} {}: {}/{} trials in {:.2}s -> {}",
                s.kind,
                &s.config_hash[..12],
                s.trials_completed,
                s.trials_requested,
                s.elapsed_secs,
                dir.join(&csv).display()
            );
            println!("{}", serde_json::to_string_pretty(&s.summary).unwrap_or_default());
            if s.partial || s.budget_exceeded {
                return Err(HarnessError::Runtime(format!(
                    "budget exceeded after {:.2}s; results are partial ({} of {} trials)",
                    s.elapsed_secs, s.trials_completed, s.trials_requested
                )));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config)?;
            println!("ok");
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::List { json } => {
            let catalog = harness::list_experiments();
            if json {
                println!("{}", serde_json::to_string_pretty(&catalog).unwrap_or_default());
            } else {
                for e in catalog {
                    println!("{:<18} {} (default trials {})", e.kind, e.description, e.default_trials);
                    for line in e.params.lines() {
                        println!("    {line}");
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
