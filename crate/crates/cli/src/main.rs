use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use decoh_cli::{load, run, validate, CliError, Scenario, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "decoh",
    version,
    about = "Run decoherence scenarios and emit CSV data"
)]
struct Cli {
    /// Suppress the summary printed after a run.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its CSV tables and report.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, short, env = OUTPUT_DIR_ENV, default_value = ".")]
        output: PathBuf,
        /// Override the Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override (or enable) Monte Carlo sampling with this many samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Check a scenario file and list every problem found.
    Validate { config: PathBuf },
    /// List the available scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run {
            config,
            output,
            seed,
            samples,
        } => {
            let mut cfg = load(&config)?;
            cfg.override_mc(seed, samples)
                .map_err(|d| CliError::Config(vec![d]))?;
            let report = run(&cfg, &output)?;
            if !cli.quiet {
                println!("{} -> {}", report.scenario, output.display());
                for file in &report.outputs {
                    println!("  wrote {file}");
                }
                for (k, v) in &report.derived {
                    println!("  {k} = {v:.6e}");
                }
                for note in &report.notes {
                    println!("  note: {note}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config).map_err(|source| CliError::Io {
                path: config.clone(),
                source,
            })?;
            let diags = validate(&text);
            if diags.is_empty() {
                if !cli.quiet {
                    println!("{}: ok", config.display());
                }
                Ok(ExitCode::SUCCESS)
            } else {
                for d in &diags {
                    println!("{}: {d}", config.display());
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<12} {}", s.name(), s.description());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
