//! Scenario runner for `gamma-decoherence`.
//!
//! A scenario file names one experiment, its parameters and a sampling
//! grid; [`run`] evaluates it and writes CSV tables plus a JSON report.

pub mod config;
pub mod report;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{validate, Diagnostic, Scenario, ScenarioConfig};
pub use report::RunReport;
pub use scenarios::{ScenarioOutput, Table};

/// Environment variable holding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "DECOH_OUTPUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),
    #[error(transparent)]
    Model(#[from] gamma_decoherence::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::parse(&text).map_err(CliError::Config)
}

/// Evaluates a configuration in memory.
pub fn evaluate(config: &ScenarioConfig) -> Result<(RunReport, ScenarioOutput), CliError> {
    let start = Instant::now();
    let output = scenarios::execute(config)?;
    let mut report = RunReport::skeleton(config);
    report.derived = output.derived.clone();
    report.notes = output.notes.clone();
    report.outputs = output.tables.iter().map(|t| t.file_name.clone()).collect();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok((report, output))
}

/// Evaluates a configuration and writes its tables and report into
/// `out_dir`, which is created if needed.
pub fn run(config: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    let (mut report, output) = evaluate(config)?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    for table in &output.tables {
        let path = out_dir.join(&table.file_name);
        std::fs::write(&path, table.to_csv()?).map_err(io(&path))?;
    }
    let stem = config.output.strip_suffix(".csv").unwrap_or(&config.output);
    let report_path = out_dir.join(format!("{stem}.report.json"));
    report.outputs.push(
        report_path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .into_owned(),
    );
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&report_path, json + "\n").map_err(io(&report_path))?;
    Ok(report)
}
