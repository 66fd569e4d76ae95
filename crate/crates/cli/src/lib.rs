//! Command-line front end for `cos2gate`: parses configs, runs one
//! pipeline per invocation and writes reproducible CSV/JSON files.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::StateBasis;
use crate::config::{ExperimentConfig, ModelChoice};
use crate::output::Output;

/// Default output root when `--out` is not given.
pub const OUTPUT_ROOT_ENV: &str = "COS2GATE_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(cos2gate::Error),
}

impl From<cos2gate::Error> for CliError {
    fn from(e: cos2gate::Error) -> Self {
        use cos2gate::Error as E;
        match e {
            E::InvalidParameter(_)
            | E::HarmonicExceedsCutoff { .. }
            | E::ParityUndefined { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Machine-readable error document.
    pub fn payload(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Numerical(_) => "numerical",
        };
        let mut body = json!({
            "kind": kind,
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        if let CliError::Numerical(e) = self {
            body["diagnostic"] = serde_json::to_value(e).expect("errors serialize");
        }
        json!({ "error": body })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cos2gate",
    version,
    about = "Charge-basis simulations of the adiabatic cos(2θ) Z gate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; defaults apply to missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [default: $COS2GATE_OUTPUT_ROOT/<command> or ./cos2gate-out/<command>].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Set a config value by dotted path, e.g. circuit.zeta_ghz=10. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads for grid-parallel work.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical potential grids and their minima.
    Potential,
    /// Lowest levels on the φ grid.
    Spectrum {
        #[arg(long, value_enum, default_value = "circuit")]
        model: ModelChoice,
    },
    /// Eigenstates at selected angles, in phase space or the charge basis.
    Eigenstates {
        #[arg(long, value_enum, default_value = "phase")]
        basis: StateBasis,
        #[arg(long, value_enum, default_value = "circuit")]
        model: ModelChoice,
    },
    /// Noise matrix elements of the logical doublet on the φ grid.
    MatrixElements,
    /// Optimized rotation schedule φ(t).
    Schedule,
    /// Gate fidelity, leakage and optional trajectory snapshots.
    Gate,
    /// Gate time and fidelity versus coupling strength.
    SweepZeta,
    /// Junction harmonics and SQUID coefficients.
    Junction,
    /// Circuit versus sin·sin model report.
    CompareModels,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Potential => "potential",
            Command::Spectrum { .. } => "spectrum",
            Command::Eigenstates { .. } => "eigenstates",
            Command::MatrixElements => "matrix-elements",
            Command::Schedule => "schedule",
            Command::Gate => "gate",
            Command::SweepZeta => "sweep-zeta",
            Command::Junction => "junction",
            Command::CompareModels => "compare-models",
        }
    }
}

fn output_dir(cli: &Cli) -> PathBuf {
    if let Some(dir) = &cli.out {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("cos2gate-out"));
    root.join(cli.command.name())
}

/// Run one parsed invocation; returns the files written.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let config = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = Output::new(&output_dir(cli), cli.command.name(), &config)?;
    pool.install(|| match &cli.command {
        Command::Potential => commands::potential(&config, &mut out),
        Command::Spectrum { model } => commands::spectrum(&config, *model, &mut out),
        Command::Eigenstates { basis, model } => {
            commands::eigenstates(&config, *model, *basis, &mut out)
        }
        Command::MatrixElements => commands::matrix_elements(&config, &mut out),
        Command::Schedule => commands::schedule(&config, &mut out),
        Command::Gate => commands::gate(&config, &mut out),
        Command::SweepZeta => commands::sweep_zeta(&config, &mut out),
        Command::Junction => commands::junction(&config, &mut out),
        Command::CompareModels => commands::compare(&config, &mut out),
    })?;
    Ok(out.written().to_vec())
}

/// Parse arguments, run, and report errors as JSON on stderr. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.payload());
            return err.exit_code();
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.payload());
            e.exit_code()
        }
    }
}
