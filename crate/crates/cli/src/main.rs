mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rdeid::acceptance::run_all;
use rdeid::numkernel::{Mp100, Mp32, Real};

use crate::commands::{Breakdown, Outcome};
use crate::config::{Command, ConfigFile, Overrides, Settings};
use crate::output::{run_id, sha256_hex, unix_now, RunManifest};

#[derive(Parser, Debug)]
#[command(
    name = "rdeid",
    version,
    about = "Spectral identification experiments for 1D reaction-diffusion equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in decimal digits.
    #[arg(long, global = true, value_parser = ["16", "32", "100"])]
    precision: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    delta_min: Option<String>,
    #[arg(long, global = true)]
    delta_max: Option<String>,
    #[arg(long, global = true)]
    delta_steps: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<String>,
    #[arg(long, global = true)]
    n1: Option<usize>,
    #[arg(long, global = true)]
    n2: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Sweep of the condition numbers K_y, K_lambda over the sampling step.
    Condition,
    /// Sweep of the rescaled ESPRIT errors at a given noise level.
    Esprit,
    /// Bound diagnostics and inequality checks.
    Bounds,
    /// PDE field snapshots and the measurement series.
    Simulate,
    /// Simulate, measure, subsample, fit and regress (p, q).
    Pipeline,
    /// Run the acceptance suite.
    Verify,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Condition => Command::Condition,
            Sub::Esprit => Command::Esprit,
            Sub::Bounds => Command::Bounds,
            Sub::Simulate => Command::Simulate,
            Sub::Pipeline => Command::Pipeline,
            Sub::Verify => Command::Verify,
        }
    }
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_BREAKDOWN: u8 = 2;

fn dispatch<R: Real>(settings: &Settings) -> Result<Outcome> {
    match settings.command {
        Command::Condition => commands::condition::<R>(settings),
        Command::Esprit => commands::esprit::<R>(settings),
        Command::Bounds => commands::bounds::<R>(settings),
        Command::Simulate => commands::simulate_cmd::<R>(settings),
        Command::Pipeline => commands::pipeline::<R>(settings),
        Command::Verify => unreachable!("verify does not write tables"),
    }
}

fn verify(seed: u64) -> u8 {
    let results = run_all(seed);
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        0
    } else {
        EXIT_VALIDATION
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let started = unix_now();
    let command = Command::from(cli.command);
    let (file, raw) = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => (ConfigFile::default(), Vec::new()),
    };
    let flags = Overrides {
        precision: cli
            .precision
            .as_deref()
            .map(|p| p.parse().expect("validated by clap")),
        seed: cli.seed,
        delta_min: cli.delta_min.clone(),
        delta_max: cli.delta_max.clone(),
        delta_steps: cli.delta_steps,
        epsilon: cli.epsilon.clone(),
        n1: cli.n1,
        n2: cli.n2,
    };
    let settings = Settings::resolve(command, &file, &flags)?;
    if command == Command::Verify {
        return Ok(verify(settings.seed));
    }
    log::info!(
        "{} at {} digits, seed {}",
        command.name(),
        settings.precision,
        settings.seed
    );
    let outcome = match settings.precision {
        16 => dispatch::<f64>(&settings),
        32 => dispatch::<Mp32>(&settings),
        _ => dispatch::<Mp100>(&settings),
    }?;
    let id = run_id(&settings)?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create {}", cli.out.display()))?;
    let mut outputs = Vec::new();
    for table in &outcome.tables {
        let path = table.write(&cli.out, &id)?;
        outputs.push(display_name(&path));
    }
    let code = if outcome.breakdowns.is_empty() {
        0
    } else {
        eprintln!(
            "error: {}",
            Breakdown {
                points: outcome.breakdowns.clone()
            }
        );
        EXIT_BREAKDOWN
    };
    let manifest = RunManifest {
        run_id: id,
        subcommand: command.name().into(),
        config_digest: sha256_hex(&raw),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        seed: settings.seed,
        precision: settings.precision,
        outputs,
        started_unix: started,
        finished_unix: unix_now(),
        exit_code: code as i32,
        settings,
    };
    manifest.write(&cli.out)?;
    for name in &manifest.outputs {
        println!("{}", cli.out.join(name).display());
    }
    Ok(code)
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
