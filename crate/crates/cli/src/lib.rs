//! Experiment runner for operator-orbit frame checks: declarative JSON
//! configs in, versioned JSON or CSV reports out.

pub mod checks;
pub mod config;
pub mod error;
pub mod presets;
pub mod report;

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{config_hash, ExperimentReport, TOOL_VERSION};

/// Environment variable naming an optional report cache directory.
pub const CACHE_ENV: &str = "DYNSAMP_CACHE";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the `tol` entry of the config's tolerances.
    pub tol: Option<f64>,
    pub parallel: bool,
    pub cache_dir: Option<PathBuf>,
}

impl RunOptions {
    pub fn from_env() -> Self {
        RunOptions {
            cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
            ..RunOptions::default()
        }
    }
}

fn cache_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{hash}-{TOOL_VERSION}.json"))
}

/// Validates the config, runs its checks and assembles the report.
pub fn execute(mut config: ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, CliError> {
    if let Some(t) = opts.tol {
        config.tolerances.insert("tol".into(), t);
    }
    let exp = config.clone().validate()?;
    let hash = config_hash(&config);
    if let Some(dir) = &opts.cache_dir {
        if let Ok(text) = std::fs::read_to_string(cache_path(dir, &hash)) {
            if let Ok(r) = ExperimentReport::from_json(&text) {
                if r.validate().is_ok() && r.config == config {
                    return Ok(r);
                }
            }
        }
    }
    let records = checks::run_all(&exp, opts.parallel);
    let report = ExperimentReport::new(&config, records);
    if let Some(dir) = &opts.cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cache: {e}")))?;
        std::fs::write(cache_path(dir, &hash), report.to_json()).map_err(|e| CliError::Io(format!("cache: {e}")))?;
    }
    Ok(report)
}

/// 0 when every check passes, 2 otherwise.
pub fn exit_code(report: &ExperimentReport) -> i32 {
    if report.pass {
        0
    } else {
        2
    }
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(report.to_json()),
        Format::Csv => report.to_csv(),
    }
}

pub fn write_report(report: &ExperimentReport, path: &Path, format: Format) -> Result<(), CliError> {
    std::fs::write(path, render(report, format)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// One line per check for the terminal.
pub fn summary(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        s.push_str(&format!("{status} {} ({:.3}s)", c.name, c.wall_time));
        if let Some(e) = &c.error {
            s.push_str(&format!(": {e}"));
        }
        s.push('\n');
    }
    s
}
