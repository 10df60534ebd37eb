use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Deserialize;

use crate::detect::{SCORED_COLUMNS, SCORED_FORMAT, SCORED_VERSION};
use crate::io::{open_input, open_output};
use crate::CliError;

pub const PLOT_COLUMNS: [&str; 6] = ["t", "truth", "prediction", "error", "threshold", "flag"];

#[derive(Debug, Args)]
pub struct PlotdataArgs {
    /// Scored output of `detect` (JSON lines or CSV), or `-` for stdin.
    pub input: String,
    /// Output CSV (default stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    t: i64,
    value: f64,
    prediction: f64,
    error: f64,
    threshold: f64,
    #[allow(dead_code)]
    score: f64,
    flag: u8,
}

#[derive(Debug, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("line {line}: {msg}"))
}

fn check_header(format: &str, version: u32, line: usize) -> Result<(), CliError> {
    if format != SCORED_FORMAT || version != SCORED_VERSION {
        return Err(malformed(
            line,
            format!("unsupported scored format {format} v{version}"),
        ));
    }
    Ok(())
}

fn parse_csv_row(cells: &[&str], line: usize) -> Result<Record, CliError> {
    if cells.len() != SCORED_COLUMNS.len() {
        return Err(malformed(
            line,
            format!(
                "expected {} fields, found {}",
                SCORED_COLUMNS.len(),
                cells.len()
            ),
        ));
    }
    let num = |i: usize| -> Result<f64, CliError> {
        cells[i].trim().parse().map_err(|_| {
            malformed(
                line,
                format!("{} {:?} is not a number", SCORED_COLUMNS[i], cells[i]),
            )
        })
    };
    Ok(Record {
        t: cells[0]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("t {:?} is not an integer", cells[0])))?,
        value: num(1)?,
        prediction: num(2)?,
        error: num(3)?,
        threshold: num(4)?,
        score: num(5)?,
        flag: cells[6]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("flag {:?} is not 0 or 1", cells[6])))?,
    })
}

/// Parses either scored layout. Blank lines are skipped.
fn parse(reader: impl BufRead) -> Result<Vec<Record>, CliError> {
    enum Layout {
        Unknown,
        Jsonl,
        Csv { header_seen: bool },
    }
    let mut layout = Layout::Unknown;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| malformed(n, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match layout {
            Layout::Unknown => {
                if text.starts_with('{') {
                    let h: Header = serde_json::from_str(text).map_err(|e| malformed(n, e))?;
                    check_header(&h.format, h.version, n)?;
                    layout = Layout::Jsonl;
                } else if let Some(tag) = text.strip_prefix('#') {
                    let mut parts = tag.split_whitespace();
                    let format = parts.next().unwrap_or_default();
                    let version = parts
                        .next()
                        .and_then(|v| v.strip_prefix('v'))
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| malformed(n, "missing version tag"))?;
                    check_header(format, version, n)?;
                    layout = Layout::Csv { header_seen: false };
                } else {
                    return Err(malformed(n, "missing scored-output header"));
                }
            }
            Layout::Jsonl => {
                let r: Record = serde_json::from_str(text).map_err(|e| malformed(n, e))?;
                records.push(r);
            }
            Layout::Csv { header_seen: false } => {
                let cols: Vec<&str> = text.split(',').map(str::trim).collect();
                if cols != SCORED_COLUMNS {
                    return Err(malformed(n, format!("unexpected columns {text:?}")));
                }
                layout = Layout::Csv { header_seen: true };
            }
            Layout::Csv { header_seen: true } => {
                let cells: Vec<&str> = text.split(',').collect();
                records.push(parse_csv_row(&cells, n)?);
            }
        }
    }
    for (i, r) in records.iter().enumerate() {
        if r.flag > 1 {
            return Err(CliError::Data(format!(
                "record {}: flag {} is not 0 or 1",
                i + 1,
                r.flag
            )));
        }
    }
    Ok(records)
}

pub fn run(args: &PlotdataArgs) -> Result<(), CliError> {
    let records = parse(BufReader::new(open_input(&args.input)?))?;
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "{}", PLOT_COLUMNS.join(","))?;
    for r in &records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.value, r.prediction, r.error, r.threshold, r.flag
        )?;
    }
    out.flush()?;
    Ok(())
}
