use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use omlad::dataio::{
    generate_synthetic, inject_c_to_f, write_csv_to, AnomalyMagnitude, DriftSpec, SynthSpec,
};

use crate::config::{CommonArgs, FileConfig};
use crate::io::{open_output, read_series, writes_stdout, SchemaArgs};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DriftKind {
    None,
    Sudden,
    Incremental,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML series definition; individual flags override its fields.
    #[arg(long, conflicts_with = "input")]
    pub spec: Option<PathBuf>,
    /// Start from the drift benchmark fixture.
    #[arg(long, conflicts_with_all = ["spec", "input"])]
    pub fixture: bool,
    /// Existing CSV to receive Fahrenheit-conversion anomalies (needs `--inject-cf`).
    #[arg(long, requires = "inject_cf")]
    pub input: Option<String>,
    /// Fraction of points converted from Celsius to Fahrenheit and labeled.
    #[arg(long = "inject-cf", value_name = "RATE", requires = "input")]
    pub inject_cf: Option<f64>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub trend: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long = "noise-std")]
    pub noise_std: Option<f64>,
    #[arg(long, value_enum)]
    pub drift: Option<DriftKind>,
    /// Sudden drift onset, or start of an incremental ramp.
    #[arg(long = "drift-at")]
    pub drift_at: Option<usize>,
    /// End of an incremental ramp.
    #[arg(long = "drift-to")]
    pub drift_to: Option<usize>,
    /// Size of the level change.
    #[arg(long = "drift-delta")]
    pub drift_delta: Option<f64>,
    #[arg(long = "anomaly-rate")]
    pub anomaly_rate: Option<f64>,
    /// Spike size in noise deviations.
    #[arg(long = "anomaly-k", conflicts_with = "anomaly_abs")]
    pub anomaly_k: Option<f64>,
    /// Spike size in absolute units.
    #[arg(long = "anomaly-abs")]
    pub anomaly_abs: Option<f64>,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn build_spec(args: &SynthArgs, seed: Option<u64>) -> Result<SynthSpec, CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None if args.fixture => SynthSpec::drift_fixture(0),
        None => SynthSpec::default(),
    };
    if let Some(v) = args.n {
        spec.n = v;
    }
    if let Some(v) = args.level {
        spec.level = v;
    }
    if let Some(v) = args.trend {
        spec.trend = v;
    }
    if let Some(v) = args.amplitude {
        spec.amplitude = v;
    }
    if let Some(v) = args.period {
        spec.period = v;
    }
    if let Some(v) = args.noise_std {
        spec.noise_std = v;
    }
    if let Some(v) = args.anomaly_rate {
        spec.anomaly_rate = v;
    }
    if let Some(k) = args.anomaly_k {
        spec.anomaly_magnitude = AnomalyMagnitude::NoiseMultiple { k };
    }
    if let Some(value) = args.anomaly_abs {
        spec.anomaly_magnitude = AnomalyMagnitude::Absolute { value };
    }
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| CliError::Config(format!("--drift needs {flag}")))
    };
    spec.drift = match args.drift {
        None => spec.drift,
        Some(DriftKind::None) => DriftSpec::None,
        Some(DriftKind::Sudden) => DriftSpec::Sudden {
            at: need(args.drift_at, "--drift-at")?,
            delta: args.drift_delta.unwrap_or(0.0),
        },
        Some(DriftKind::Incremental) => DriftSpec::Incremental {
            from: need(args.drift_at, "--drift-at")?,
            to: need(args.drift_to, "--drift-to")?,
            total_delta: args.drift_delta.unwrap_or(0.0),
        },
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run(args: &SynthArgs, common: &CommonArgs, file: &FileConfig) -> Result<(), CliError> {
    let seed = common.seed.or(file.seed);
    let (series, drift) = match (&args.input, args.inject_cf) {
        (Some(path), Some(rate)) => {
            let source = read_series(path, &args.schema.schema())?;
            (inject_c_to_f(&source, rate, seed.unwrap_or(0))?, "none")
        }
        _ => {
            let spec = build_spec(args, seed)?;
            if common.verbose {
                eprintln!(
                    "resolved spec:\n{}",
                    toml::to_string(&spec).expect("spec serializes")
                );
            }
            (generate_synthetic(&spec)?, spec.drift.name())
        }
    };

    let mut out = open_output(args.output.as_deref())?;
    write_csv_to(&mut out, &series)?;
    out.flush()?;

    let summary = format!(
        "n={} anomalies={} drift={}",
        series.len(),
        series.anomaly_count(),
        drift
    );
    if writes_stdout(args.output.as_deref()) {
        eprintln!("{summary}");
    } else {
        println!("{summary}");
    }
    Ok(())
}
