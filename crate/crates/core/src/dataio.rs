//! Loading, generating and mutating labeled series.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;
use crate::Observation;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    ParseError { row: usize, message: String },
    #[error("row {row}: time does not increase")]
    NonMonotoneTime { row: usize },
    #[error("row {row}: non-finite value")]
    NonFiniteValue { row: usize },
    #[error("anomaly rate {0} must lie in (0, 1)")]
    RateOutOfRange(f64),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid label windows: {0}")]
    InvalidWindows(String),
}

/// Descriptive metadata carried alongside a series.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub name: String,
    pub source: String,
    pub units: String,
    pub season_hint: Option<usize>,
    /// Original time column, one entry per observation.
    pub timestamps: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSeries {
    pub observations: Vec<Observation>,
    pub meta: SeriesMeta,
}

impl LabeledSeries {
    /// Ticks `0..n`, all labels false.
    pub fn from_values(values: &[f64]) -> Self {
        Self {
            observations: values
                .iter()
                .enumerate()
                .map(|(i, &v)| Observation::labeled(i as i64, v, false))
                .collect(),
            meta: SeriesMeta {
                timestamps: (0..values.len()).map(|i| i.to_string()).collect(),
                ..SeriesMeta::default()
            },
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.value).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.observations
            .iter()
            .map(|o| o.label.unwrap_or(false))
            .collect()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels().iter().filter(|&&l| l).count()
    }
}

/// Column names to read.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub time: String,
    pub value: String,
    pub label: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            value: "value".into(),
            label: Some("label".into()),
        }
    }
}

impl CsvSchema {
    pub fn nab() -> Self {
        Self {
            time: "timestamp".into(),
            value: "value".into(),
            label: None,
        }
    }
}

/// Sort key of a time cell: numeric values first, then common date formats.
fn parse_time(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    parse_datetime(s).map(|dt| dt.and_utc().timestamp_micros() as f64 / 1e6)
}

fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in [
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

fn parse_label(s: &str, row: usize) -> Result<bool, DataError> {
    match s.trim() {
        "" | "0" | "false" | "False" => Ok(false),
        "1" | "true" | "True" => Ok(true),
        other => Err(DataError::ParseError {
            row,
            message: format!("label {other:?} is not 0 or 1"),
        }),
    }
}

/// Reads a headed CSV. Rows are numbered from 1 (the first data row) in
/// errors. Ticks are `0..n`; the time column is kept as metadata and must
/// strictly increase when it parses as a number or date.
pub fn read_csv_from<R: Read>(reader: R, schema: &CsvSchema) -> Result<LabeledSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| DataError::ParseError {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let time_idx = find(&schema.time)?;
    let value_idx = find(&schema.value)?;
    let label_idx = match &schema.label {
        Some(name) => headers.iter().position(|h| h == name),
        None => None,
    };

    let mut series = LabeledSeries::default();
    let mut last_time: Option<f64> = None;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DataError::ParseError {
            row,
            message: e.to_string(),
        })?;
        let cell = |idx: usize| {
            record.get(idx).ok_or_else(|| DataError::ParseError {
                row,
                message: "missing field".into(),
            })
        };
        let time_cell = cell(time_idx)?;
        let raw_value = cell(value_idx)?;
        let value: f64 = raw_value.parse().map_err(|_| DataError::ParseError {
            row,
            message: format!("value {raw_value:?} is not a number"),
        })?;
        if !value.is_finite() {
            return Err(DataError::NonFiniteValue { row });
        }
        if let Some(key) = parse_time(time_cell) {
            if last_time.is_some_and(|prev| key <= prev) {
                return Err(DataError::NonMonotoneTime { row });
            }
            last_time = Some(key);
        }
        let label = match label_idx {
            Some(idx) => parse_label(cell(idx)?, row)?,
            None => false,
        };
        series
            .observations
            .push(Observation::labeled(i as i64, value, label));
        series.meta.timestamps.push(time_cell.to_string());
    }
    Ok(series)
}

pub fn read_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LabeledSeries, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut series = read_csv_from(file, schema)?;
    series.meta.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    series.meta.source = path.display().to_string();
    Ok(series)
}

/// Writes `time,value,label`; values use the shortest round-trip form.
pub fn write_csv_to<W: Write>(writer: W, series: &LabeledSeries) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| DataError::Io(std::io::Error::other(e));
    w.write_record(["time", "value", "label"]).map_err(io)?;
    for (i, o) in series.observations.iter().enumerate() {
        let time = series
            .meta
            .timestamps
            .get(i)
            .cloned()
            .unwrap_or_else(|| o.t.to_string());
        let label = if o.label.unwrap_or(false) { "1" } else { "0" };
        w.write_record([time, o.value.to_string(), label.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, series: &LabeledSeries) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_csv_to(std::io::BufWriter::new(file), series)
}

/// Parses label windows: either a JSON array of `[start, end]` pairs or a
/// NAB-style object mapping file names to such arrays (looked up by `key`).
pub fn parse_label_windows(
    json: &str,
    key: Option<&str>,
) -> Result<Vec<(String, String)>, DataError> {
    let bad = |m: String| DataError::InvalidWindows(m);
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| bad(e.to_string()))?;
    let list = match &value {
        serde_json::Value::Array(_) => value.clone(),
        serde_json::Value::Object(map) => {
            let key = key.ok_or_else(|| bad("window map needs a series name".into()))?;
            map.iter()
                .find(|(k, _)| k.as_str() == key || k.ends_with(&format!("/{key}")))
                .map(|(_, v)| v.clone())
                .ok_or_else(|| bad(format!("no windows for {key:?}")))?
        }
        _ => return Err(bad("expected an array or object".into())),
    };
    let pairs: Vec<(String, String)> =
        serde_json::from_value(list).map_err(|e| bad(e.to_string()))?;
    Ok(pairs)
}

/// Marks every observation whose timestamp lies inside a window (inclusive).
pub fn apply_label_windows(
    series: &mut LabeledSeries,
    windows: &[(String, String)],
) -> Result<(), DataError> {
    let parsed: Vec<(f64, f64)> = windows
        .iter()
        .map(|(a, b)| match (parse_time(a), parse_time(b)) {
            (Some(a), Some(b)) if a <= b => Ok((a, b)),
            _ => Err(DataError::InvalidWindows(format!("bad window [{a}, {b}]"))),
        })
        .collect::<Result<_, _>>()?;
    for (i, obs) in series.observations.iter_mut().enumerate() {
        let key = series
            .meta
            .timestamps
            .get(i)
            .and_then(|s| parse_time(s))
            .ok_or_else(|| DataError::ParseError {
                row: i + 1,
                message: "timestamp does not parse".into(),
            })?;
        obs.label = Some(parsed.iter().any(|&(a, b)| key >= a && key <= b));
    }
    Ok(())
}

/// Loads a NAB data file and labels it from a windows file.
pub fn read_nab(
    data: impl AsRef<Path>,
    windows: impl AsRef<Path>,
) -> Result<LabeledSeries, DataError> {
    let mut series = read_csv(data.as_ref(), &CsvSchema::nab())?;
    let json = std::fs::read_to_string(windows)?;
    let key = data
        .as_ref()
        .file_name()
        .map(|s| s.to_string_lossy().into_owned());
    let wins = parse_label_windows(&json, key.as_deref())?;
    apply_label_windows(&mut series, &wins)?;
    Ok(series)
}

/// Averages values per ISO week. Timestamps must parse as dates; a week is
/// labeled anomalous if any of its days is.
pub fn resample_weekly(series: &LabeledSeries) -> Result<LabeledSeries, DataError> {
    let mut weeks: BTreeMap<(i32, u32), (NaiveDate, f64, usize, bool)> = BTreeMap::new();
    for (i, o) in series.observations.iter().enumerate() {
        let dt = series
            .meta
            .timestamps
            .get(i)
            .and_then(|s| parse_datetime(s.trim()))
            .ok_or_else(|| DataError::ParseError {
                row: i + 1,
                message: "timestamp is not a date".into(),
            })?;
        let week = dt.date().iso_week();
        let start = NaiveDate::from_isoywd_opt(week.year(), week.week(), chrono::Weekday::Mon)
            .expect("valid ISO week");
        let entry = weeks
            .entry((week.year(), week.week()))
            .or_insert((start, 0.0, 0, false));
        entry.1 += o.value;
        entry.2 += 1;
        entry.3 |= o.label.unwrap_or(false);
    }
    let mut out = LabeledSeries {
        meta: SeriesMeta {
            timestamps: Vec::with_capacity(weeks.len()),
            season_hint: Some(52),
            ..series.meta.clone()
        },
        ..LabeledSeries::default()
    };
    for (i, (start, sum, count, label)) in weeks.into_values().enumerate() {
        out.observations
            .push(Observation::labeled(i as i64, sum / count as f64, label));
        out.meta
            .timestamps
            .push(start.format("%Y-%m-%d").to_string());
    }
    Ok(out)
}

pub fn celsius_to_fahrenheit(c: f64) -> f64 {
    c * 9.0 / 5.0 + 32.0
}

/// Converts `floor(rate * n)` uniformly chosen points from Celsius to
/// Fahrenheit and labels exactly those points anomalous. Existing labels
/// are replaced.
pub fn inject_c_to_f(
    series: &LabeledSeries,
    rate: f64,
    seed: u64,
) -> Result<LabeledSeries, DataError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(DataError::RateOutOfRange(rate));
    }
    let n = series.len();
    let k = (rate * n as f64).floor() as usize;
    let mut out = series.clone();
    for o in &mut out.observations {
        o.label = Some(false);
    }
    let mut rng = SeededRng::new(seed);
    for i in rng.choose_distinct(n, k) {
        let o = &mut out.observations[i];
        o.value = celsius_to_fahrenheit(o.value);
        o.label = Some(true);
    }
    Ok(out)
}

/// Structural change added on top of the base signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftSpec {
    None,
    /// Adds `delta` for every `t >= at`.
    Sudden {
        at: usize,
        delta: f64,
    },
    /// Ramps linearly from 0 at `from` to `total_delta` at `to`, then holds.
    Incremental {
        from: usize,
        to: usize,
        total_delta: f64,
    },
}

impl DriftSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DriftSpec::None => "none",
            DriftSpec::Sudden { .. } => "sudden",
            DriftSpec::Incremental { .. } => "incremental",
        }
    }

    pub fn offset(&self, t: usize) -> f64 {
        match *self {
            DriftSpec::None => 0.0,
            DriftSpec::Sudden { at, delta } => {
                if t >= at {
                    delta
                } else {
                    0.0
                }
            }
            DriftSpec::Incremental {
                from,
                to,
                total_delta,
            } => {
                if t <= from {
                    0.0
                } else if t >= to {
                    total_delta
                } else {
                    total_delta * (t - from) as f64 / (to - from) as f64
                }
            }
        }
    }
}

/// Size of injected spikes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnomalyMagnitude {
    /// `k * noise_std`, sign chosen at random.
    NoiseMultiple { k: f64 },
    /// Fixed `value`, sign chosen at random.
    Absolute { value: f64 },
}

/// Synthetic series definition.
///
/// `x_t = level + trend*t + amplitude*sin(2 pi t / period) + drift(t) + noise_t`,
/// followed by additive spikes at `floor(anomaly_rate * n)` distinct points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    #[serde(default)]
    pub level: f64,
    #[serde(default)]
    pub trend: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_period")]
    pub period: usize,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "default_drift")]
    pub drift: DriftSpec,
    #[serde(default)]
    pub anomaly_rate: f64,
    #[serde(default = "default_magnitude")]
    pub anomaly_magnitude: AnomalyMagnitude,
    #[serde(default)]
    pub seed: u64,
}

fn default_period() -> usize {
    52
}

fn default_drift() -> DriftSpec {
    DriftSpec::None
}

fn default_magnitude() -> AnomalyMagnitude {
    AnomalyMagnitude::NoiseMultiple { k: 6.0 }
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            level: 0.0,
            trend: 0.0,
            amplitude: 0.0,
            period: default_period(),
            noise_std: 0.0,
            drift: default_drift(),
            anomaly_rate: 0.0,
            anomaly_magnitude: default_magnitude(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// The drift benchmark fixture: weekly seasonality, a level shift of ten
    /// noise deviations halfway through and 1% spikes.
    pub fn drift_fixture(seed: u64) -> Self {
        Self {
            n: 3000,
            level: 20.0,
            trend: 0.0,
            amplitude: 10.0,
            period: 52,
            noise_std: 1.0,
            drift: DriftSpec::Sudden {
                at: 1500,
                delta: 10.0,
            },
            anomaly_rate: 0.01,
            anomaly_magnitude: AnomalyMagnitude::NoiseMultiple { k: 6.0 },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidSpec(m.to_string()));
        if self.n == 0 {
            return bad("n must be >= 1");
        }
        if self.period == 0 {
            return bad("period must be >= 1");
        }
        let finite = [self.level, self.trend, self.amplitude, self.noise_std];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("level, trend, amplitude and noise_std must be finite");
        }
        if self.noise_std < 0.0 {
            return bad("noise_std must be >= 0");
        }
        if !(0.0..1.0).contains(&self.anomaly_rate) {
            return bad("anomaly_rate must lie in [0, 1)");
        }
        match self.drift {
            DriftSpec::None => {}
            DriftSpec::Sudden { at, delta } => {
                if at >= self.n || !delta.is_finite() {
                    return bad("sudden drift needs at < n and a finite delta");
                }
            }
            DriftSpec::Incremental {
                from,
                to,
                total_delta,
            } => {
                if from >= to || to >= self.n || !total_delta.is_finite() {
                    return bad("incremental drift needs from < to < n and a finite delta");
                }
            }
        }
        let m = match self.anomaly_magnitude {
            AnomalyMagnitude::NoiseMultiple { k } => k,
            AnomalyMagnitude::Absolute { value } => value,
        };
        if !m.is_finite() {
            return bad("anomaly magnitude must be finite");
        }
        Ok(())
    }

    /// The deterministic part of `x_t` (no noise, no spikes).
    pub fn signal(&self, t: usize) -> f64 {
        let tf = t as f64;
        self.level
            + self.trend * tf
            + self.amplitude * (TAU * tf / self.period as f64).sin()
            + self.drift.offset(t)
    }
}

/// Draw order: `n` noise values from the seed stream, then the spike
/// positions, then one sign per spike in position-selection order.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<LabeledSeries, DataError> {
    spec.validate()?;
    let mut rng = SeededRng::new(spec.seed);
    let mut values: Vec<f64> = (0..spec.n)
        .map(|t| {
            let noise = if spec.noise_std > 0.0 {
                spec.noise_std * rng.normal()
            } else {
                0.0
            };
            spec.signal(t) + noise
        })
        .collect();
    let mut labels = vec![false; spec.n];
    let k = (spec.anomaly_rate * spec.n as f64).floor() as usize;
    let spike = match spec.anomaly_magnitude {
        AnomalyMagnitude::NoiseMultiple { k } => k * spec.noise_std,
        AnomalyMagnitude::Absolute { value } => value,
    };
    let positions = rng.choose_distinct(spec.n, k);
    for i in positions {
        let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        values[i] += sign * spike;
        labels[i] = true;
    }
    let mut series = LabeledSeries::from_values(&values);
    for (o, l) in series.observations.iter_mut().zip(labels) {
        o.label = Some(l);
    }
    series.meta.name = format!("synthetic-{}", spec.seed);
    series.meta.source = "synthetic".into();
    series.meta.season_hint = Some(spec.period);
    Ok(series)
}
