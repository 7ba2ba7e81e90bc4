//! `qutrit-rb`: run benchmarking experiments on the built-in simulator.
//!
//! Verbs:
//! - `run <config>` writes `summary.json`, `decays.csv` and `manifest.json`
//!   into the output directory (`QUTRIT_RB_OUTPUT_DIR` overrides the config).
//! - `export-table <path>` writes the compiled 216-element Clifford table.
//! - `presets` lists the stock noise models.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 fit failure.
//! Failures print a one-line JSON report on stderr.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qutrit_rb::noise::presets;
use qutrit_rb::TableFile;
use serde_json::json;
use sha2::{Digest, Sha256};

use config::ExperimentConfig;

pub const OUTPUT_DIR_ENV: &str = "QUTRIT_RB_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "qutrit-rb-output";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Fit(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Fit(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
            CliError::Fit(_) => "fit",
        }
    }
}

#[derive(Parser)]
#[command(name = "qutrit-rb", version, about = "Qutrit randomized and cycle benchmarking on a simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Write the compiled single-qutrit Clifford table as JSON.
    ExportTable { path: PathBuf },
    /// List the stock noise presets.
    Presets,
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn run(config_path: &Path) -> Result<PathBuf, CliError> {
    let (cfg, bytes) = ExperimentConfig::load(config_path)?;
    let plan = cfg.plan()?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let noise = cfg.noise_model(base)?;
    let out_dir = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

    let outcome = report::execute(&plan, &noise, cfg.bootstrap, cfg.seed)?;

    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Runtime(format!("{}: {e}", out_dir.display())))?;
    let to_json = |v: &serde_json::Value| {
        serde_json::to_string_pretty(v).map_err(|e| CliError::Runtime(e.to_string())).map(|s| s + "\n")
    };
    write(&out_dir.join("decays.csv"), &report::decays_csv(&outcome.records))?;
    write(&out_dir.join("summary.json"), &to_json(&outcome.summary)?)?;
    let manifest = json!({
        "tool": "qutrit-rb",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": hex::encode(Sha256::digest(&bytes)),
        "protocol": cfg.protocol.name(),
        "seed": cfg.seed,
        "outputs": ["summary.json", "decays.csv"],
    });
    write(&out_dir.join("manifest.json"), &to_json(&manifest)?)?;
    Ok(out_dir)
}

fn export_table(path: &Path) -> Result<(), CliError> {
    let file = TableFile::build().map_err(|e| CliError::Runtime(e.to_string()))?;
    file.write(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    println!(
        "wrote {} elements to {} (mean pulse count {:.4})",
        file.order,
        path.display(),
        file.stats.mean_pulse_count
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(&config).map(|dir| println!("results written to {}", dir.display())),
        Command::ExportTable { path } => export_table(&path),
        Command::Presets => {
            for p in presets() {
                println!("{:<24} {}", p.name, p.description);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(e.code())
        }
    }
}
