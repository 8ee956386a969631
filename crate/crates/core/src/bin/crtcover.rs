use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use crtcover::experiments::{registry, run, ConfigFile, Experiment, ExperimentConfig, ExperimentError};

/// Cover-time and CRT simulation experiments.
///
/// Run `crtcover list` for the available experiments.
#[derive(Debug, Parser)]
#[command(name = "crtcover", version)]
struct Cli {
    /// Experiment name, or `list`.
    experiment: String,
    /// JSON config; missing fields take the experiment's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `results/<experiment>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to CRTCOVER_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn fail(err: &ExperimentError) -> ExitCode {
    eprintln!("{}", err.report());
    ExitCode::from(if err.kind() == "config" { 2 } else { 1 })
}

fn workers(flag: Option<usize>) -> Result<usize, ExperimentError> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var("CRTCOVER_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| ExperimentError::Config(format!("CRTCOVER_WORKERS={v:?} is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    if cli.experiment == "list" {
        for e in registry() {
            println!("{:<24} {}", e.name(), e.description());
        }
        return ExitCode::SUCCESS;
    }
    let result = (|| {
        let experiment: Experiment = cli.experiment.parse()?;
        let file = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let mut config = ExperimentConfig::resolve(file, Some(experiment))?;
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        let out = cli
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("results").join(experiment.name()));
        config.out = Some(out.clone());
        let workers = workers(cli.workers)?;
        let output = run(&config, &out, workers)?;
        Ok::<_, ExperimentError>((out, output.records.len()))
    })();
    match result {
        Ok((out, records)) => {
            println!("{}", json!({ "out": out.display().to_string(), "records": records }));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
