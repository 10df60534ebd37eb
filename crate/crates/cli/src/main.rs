//! `omlad`: score streams, run benchmarks, generate data and emit plot data.
//!
//! Exit codes: 0 success, 1 output failure, 2 configuration error, 3 data error.

mod benchmark;
mod config;
mod detect;
mod io;
mod plotdata;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use omlad::dataio::DataError;
use omlad::detector::DetectorError;
use omlad::eval::EvalError;
use omlad::ConfigError;
use thiserror::Error;

use config::CommonArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidSpec(_) | DataError::RateOutOfRange(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DetectorError> for CliError {
    fn from(e: DetectorError) -> Self {
        match e {
            DetectorError::Config(c) => c.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(c) => c.into(),
            EvalError::Detector(d) => d.into(),
            EvalError::NoContenders
            | EvalError::UnknownContender(_)
            | EvalError::NoRepeats
            | EvalError::Forecast(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "omlad",
    version,
    about = "Online anomaly detection for non-stationary time series"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a series and write one record per post-warmup point.
    #[command(allow_negative_numbers = true)]
    Detect(detect::DetectArgs),
    /// Compare the online detector with the batch baselines.
    #[command(allow_negative_numbers = true)]
    Benchmark(benchmark::BenchmarkArgs),
    /// Generate a labeled synthetic series or inject unit-conversion anomalies.
    #[command(allow_negative_numbers = true)]
    Synth(synth::SynthArgs),
    /// Turn scored output into a flat CSV for plotting.
    Plotdata(plotdata::PlotdataArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = config::FileConfig::load(cli.common.config.as_deref())?;
    match cli.command {
        Command::Detect(args) => detect::run(&args, &cli.common, &file),
        Command::Benchmark(args) => benchmark::run(&args, &cli.common, &file),
        Command::Synth(args) => synth::run(&args, &cli.common, &file),
        Command::Plotdata(args) => plotdata::run(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Output(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omlad: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
