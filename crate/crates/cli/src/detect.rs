use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use omlad::{Observation, PadDetector, ScoredPoint};
use serde::Serialize;

use crate::config::{self, CommonArgs, DetectorArgs, FileConfig};
use crate::io::{open_output, read_series, SchemaArgs};
use crate::CliError;

pub const SCORED_FORMAT: &str = "omlad-scored";
pub const SCORED_VERSION: u32 = 1;
pub const SCORED_COLUMNS: [&str; 7] = [
    "t",
    "value",
    "prediction",
    "error",
    "threshold",
    "score",
    "flag",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Input CSV, or `-` for stdin.
    pub input: String,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Output path (default stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: OutputFormat,
    /// Resume from a detector snapshot; its configuration replaces the flags.
    #[arg(long = "state-in")]
    pub state_in: Option<PathBuf>,
    /// Write the detector snapshot after the last point.
    #[arg(long = "state-out")]
    pub state_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Header {
    format: &'static str,
    version: u32,
    columns: [&'static str; 7],
    warmup: usize,
}

#[derive(Serialize)]
struct Record {
    t: i64,
    value: f64,
    prediction: f64,
    error: f64,
    threshold: f64,
    score: f64,
    flag: u8,
}

impl From<&ScoredPoint> for Record {
    fn from(p: &ScoredPoint) -> Self {
        Self {
            t: p.t,
            value: p.truth,
            prediction: p.prediction,
            error: p.error,
            threshold: p.threshold,
            score: p.score,
            flag: u8::from(p.is_flagged()),
        }
    }
}

fn load_state(path: &PathBuf) -> Result<PadDetector, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    PadDetector::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn run(args: &DetectArgs, common: &CommonArgs, file: &FileConfig) -> Result<(), CliError> {
    let mut detector = match &args.state_in {
        Some(path) => {
            if args.detector.any_set() {
                eprintln!(
                    "omlad: detector flags ignored; configuration comes from {}",
                    path.display()
                );
            }
            load_state(path)?
        }
        None => PadDetector::new(config::resolve_detector(&args.detector, file)?)?,
    };
    if common.verbose {
        let resolved = serde_json::to_string_pretty(detector.config()).expect("config serializes");
        eprintln!("resolved configuration:\n{resolved}");
    }

    let series = read_series(&args.input, &args.schema.schema())?;
    // resumed streams continue after the last tick seen
    let base = detector.last_tick().map_or(0, |t| t + 1);
    let mut points = Vec::with_capacity(series.len());
    for (i, obs) in series.observations.iter().enumerate() {
        let tick = base + i as i64;
        if let Some(p) = detector.score_learn(Observation::new(tick, obs.value))? {
            points.push(p);
        }
    }

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        OutputFormat::Jsonl => {
            let header = Header {
                format: SCORED_FORMAT,
                version: SCORED_VERSION,
                columns: SCORED_COLUMNS,
                warmup: detector.config().warmup,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&header).expect("header serializes")
            )?;
            for p in &points {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&Record::from(p)).expect("record serializes")
                )?;
            }
        }
        OutputFormat::Csv => {
            writeln!(out, "# {SCORED_FORMAT} v{SCORED_VERSION}")?;
            writeln!(out, "{}", SCORED_COLUMNS.join(","))?;
            for p in &points {
                let r = Record::from(p);
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.t, r.value, r.prediction, r.error, r.threshold, r.score, r.flag
                )?;
            }
        }
    }
    out.flush()?;

    if let Some(path) = &args.state_out {
        std::fs::write(path, detector.to_json())?;
    }
    Ok(())
}
