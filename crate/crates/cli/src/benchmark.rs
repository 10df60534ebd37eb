use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use omlad::dataio::{
    apply_label_windows, generate_synthetic, inject_c_to_f, parse_label_windows, SynthSpec,
};
use omlad::eval::{run_benchmark, BenchmarkOptions};

use crate::config::{self, CommonArgs, DetectorArgs, FileConfig};
use crate::io::{read_series, SchemaArgs};
use crate::CliError;

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Labeled CSV dataset.
    #[arg(
        long,
        conflicts_with = "synthetic",
        required_unless_present = "synthetic"
    )]
    pub input: Option<String>,
    /// Label windows file (JSON array of [start, end] or a map keyed by file name).
    #[arg(long, requires = "input")]
    pub windows: Option<PathBuf>,
    /// Use the synthetic drift fixture generated from `--seed`.
    #[arg(long)]
    pub synthetic: bool,
    /// Replace a fraction of points with their Fahrenheit conversion and label them.
    #[arg(long = "inject-cf", value_name = "RATE")]
    pub inject_cf: Option<f64>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Comma-separated subset of oml-ad, baseline-none, baseline-scheduled, baseline-dynamic.
    #[arg(long, value_delimiter = ',')]
    pub contenders: Vec<String>,
    /// Timed repetitions per contender (default 100).
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Training window of the batch baselines.
    #[arg(long = "baseline-window")]
    pub baseline_window: Option<usize>,
    /// Refit period of the scheduled baseline.
    #[arg(long = "schedule-period")]
    pub schedule_period: Option<usize>,
    /// Leading points excluded from every contender's metrics (at least each contender's own warmup).
    #[arg(long = "eval-warmup")]
    pub eval_warmup: Option<usize>,
    /// Run contenders one after another instead of on separate threads.
    #[arg(long)]
    pub sequential: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include timing fields in the JSON report (makes it run-dependent).
    #[arg(long = "report-timing")]
    pub report_timing: bool,
}

pub fn run(args: &BenchmarkArgs, common: &CommonArgs, file: &FileConfig) -> Result<(), CliError> {
    let seed = config::resolve_seed(common, file);
    let contenders = config::resolve_contenders(&args.contenders, file)?;
    let options = BenchmarkOptions {
        detector: config::resolve_detector(&args.detector, file)?,
        baseline: config::resolve_baseline(args.baseline_window, args.schedule_period, file)?,
        warmup: args.eval_warmup,
        repeats: args.repeats.or(file.repeats).unwrap_or(100),
        parallel: !args.sequential,
    };
    if common.verbose {
        let resolved = serde_json::json!({
            "detector": options.detector,
            "baseline_window": options.baseline.window,
            "schedule_period": options.baseline.schedule_period,
            "contenders": contenders,
            "repeats": options.repeats,
            "seed": seed,
            "parallel": options.parallel,
        });
        eprintln!(
            "resolved configuration:\n{}",
            serde_json::to_string_pretty(&resolved).expect("serializes")
        );
    }

    let mut series = match &args.input {
        Some(path) => {
            let mut s = read_series(path, &args.schema.schema())?;
            if let Some(wpath) = &args.windows {
                let json = std::fs::read_to_string(wpath)
                    .map_err(|e| CliError::Data(format!("{}: {e}", wpath.display())))?;
                let key = std::path::Path::new(path)
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned());
                let wins = parse_label_windows(&json, key.as_deref())?;
                apply_label_windows(&mut s, &wins)?;
            }
            s
        }
        None => {
            let mut s = generate_synthetic(&SynthSpec::drift_fixture(seed))?;
            s.meta.name = format!("synthetic-drift-seed{seed}");
            s
        }
    };
    if let Some(rate) = args.inject_cf {
        let name = series.meta.name.clone();
        series = inject_c_to_f(&series, rate, seed)?;
        series.meta.name = name;
    }

    let report = run_benchmark(&series, &contenders, &options)?;
    let mut stdout = std::io::stdout().lock();
    write!(stdout, "{}", report.table())?;
    stdout.flush()?;
    if let Some(path) = &args.report {
        let json = if args.report_timing {
            report.to_json_with_timing()
        } else {
            report.to_json()
        };
        std::fs::write(path, json + "\n")?;
    }
    Ok(())
}
