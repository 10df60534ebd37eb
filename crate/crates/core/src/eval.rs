//! Forecast and detection metrics, and the benchmark runner.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::LabeledSeries;
use crate::detector::{DetectorError, ErrorScorer, PadDetector};
use crate::drift::AdwinParams;
use crate::forecast::{ForecastError, RetrainPolicy, WindowedArBaseline};
use crate::stats::RunningStats;
use crate::{ConfigError, DetectorConfig, ScoredPoint};

pub const REPORT_FORMAT: &str = "omlad-benchmark";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("no positive labels")]
    NoPositives,
    #[error("labels must contain both classes")]
    DegenerateLabels,
    #[error("non-finite score")]
    NonFiniteScore,
    #[error("no contenders")]
    NoContenders,
    #[error("series has {len} points but warmup excludes {warmup}")]
    TooShort { len: usize, warmup: usize },
    #[error("unknown contender {0:?}")]
    UnknownContender(String),
    #[error("repeats must be >= 1")]
    NoRepeats,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("baseline: {0}")]
    Forecast(#[from] ForecastError),
}

fn check_lengths(left: usize, right: usize) -> Result<(), EvalError> {
    if left != right {
        return Err(EvalError::LengthMismatch { left, right });
    }
    Ok(())
}

/// Mean absolute and mean squared error.
pub fn mae_mse(preds: &[f64], truths: &[f64]) -> Result<(f64, f64), EvalError> {
    check_lengths(preds.len(), truths.len())?;
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let (abs, sq) = preds.iter().zip(truths).fold((0.0, 0.0), |(a, s), (p, t)| {
        let e = p - t;
        (a + e.abs(), s + e * e)
    });
    let n = preds.len() as f64;
    Ok((abs / n, sq / n))
}

/// `2tp / (2tp + fp + fn)`, zero when nothing is predicted or present.
fn f1_from_counts(tp: u64, fp: u64, fn_: u64) -> f64 {
    let den = 2 * tp + fp + fn_;
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / den as f64
    }
}

/// Best F1 over thresholds taken from the scores themselves, predicting
/// positive when `score >= threshold`. Returns `(f1, threshold)` with the
/// smallest threshold among ties.
pub fn f1_sweep(scores: &[f64], labels: &[bool]) -> Result<(f64, f64), EvalError> {
    check_lengths(scores.len(), labels.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // exact comparison of 2tp/den fractions
    let mut best = (0u64, 1u64, f64::INFINITY);
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        while i < order.len() && scores[order[i]] == v {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let num = 2 * tp;
        let den = 2 * tp + fp + (positives - tp);
        let lhs = u128::from(num) * u128::from(best.1);
        let rhs = u128::from(best.0) * u128::from(den);
        if lhs >= rhs {
            best = (num, den, v);
        }
    }
    let tp_best = best.0 / 2;
    let fp_best = best.1 - best.0 - (positives - tp_best);
    Ok((
        f1_from_counts(tp_best, fp_best, positives - tp_best),
        best.2,
    ))
}

/// Area under the ROC curve as the Mann-Whitney statistic, ties counted
/// as one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_lengths(scores.len(), labels.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // ranks are 1-based; a tie block [i, j) shares rank (i + 1 + j) / 2
    let mut pos_rank_sum2 = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let block_pos = order[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        pos_rank_sum2 += block_pos * (i as u128 + 1 + j as u128);
        i = j;
    }
    // U = R_pos - n_pos (n_pos + 1) / 2, all doubled to stay integral
    let (np, nn) = (n_pos as u128, n_neg as u128);
    let u2 = pos_rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * np * nn) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContenderKind {
    OmlAd,
    BaselineNone,
    BaselineScheduled,
    BaselineDynamic,
}

impl ContenderKind {
    pub const ALL: [ContenderKind; 4] = [
        ContenderKind::OmlAd,
        ContenderKind::BaselineNone,
        ContenderKind::BaselineScheduled,
        ContenderKind::BaselineDynamic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContenderKind::OmlAd => "oml-ad",
            ContenderKind::BaselineNone => "baseline-none",
            ContenderKind::BaselineScheduled => "baseline-scheduled",
            ContenderKind::BaselineDynamic => "baseline-dynamic",
        }
    }
}

impl std::fmt::Display for ContenderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContenderKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ContenderKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| EvalError::UnknownContender(s.to_string()))
    }
}

/// Settings shared by the three batch baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineSettings {
    pub order: usize,
    pub season: Option<usize>,
    /// Training window; also the number of points before the first fit.
    pub window: usize,
    pub schedule_period: usize,
    pub adwin: AdwinParams,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            order: 4,
            season: Some(52),
            window: 800,
            schedule_period: 800,
            adwin: AdwinParams::default(),
        }
    }
}

impl BaselineSettings {
    fn build(&self, kind: ContenderKind) -> Result<WindowedArBaseline, ForecastError> {
        let policy = match kind {
            ContenderKind::BaselineScheduled => RetrainPolicy::Scheduled {
                period: self.schedule_period,
            },
            ContenderKind::BaselineDynamic => RetrainPolicy::Dynamic(self.adwin),
            _ => RetrainPolicy::None,
        };
        WindowedArBaseline::new(self.order, self.season, self.window, policy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub detector: DetectorConfig,
    pub baseline: BaselineSettings,
    /// Leading points excluded from every contender's metrics. `None`
    /// uses the largest warmup among the contenders.
    pub warmup: Option<usize>,
    pub repeats: usize,
    /// Run contenders on separate threads.
    pub parallel: bool,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::default(),
            baseline: BaselineSettings::default(),
            warmup: None,
            repeats: 100,
            parallel: true,
        }
    }
}

impl BenchmarkOptions {
    fn own_warmup(&self, kind: ContenderKind) -> usize {
        match kind {
            ContenderKind::OmlAd => self.detector.warmup,
            _ => self.baseline.window,
        }
    }

    /// Points excluded from metrics for the given contender set.
    pub fn effective_warmup(&self, contenders: &[ContenderKind]) -> usize {
        let own = contenders
            .iter()
            .map(|&k| self.own_warmup(k))
            .max()
            .unwrap_or(0);
        self.warmup.map_or(own, |w| w.max(own))
    }
}

/// Metrics of one contender over the post-warmup span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub mse: f64,
    pub f1: f64,
    pub best_f1_threshold: f64,
    pub auc_roc: f64,
    pub mean_time_ms: f64,
    pub std_time_ms: f64,
    pub n_points: usize,
    pub n_anomalies: usize,
}

impl MetricsReport {
    /// Metrics from aligned forecasts, scores and labels. Timing is zero.
    pub fn from_points(points: &[ScoredPoint], labels: &[bool]) -> Result<Self, EvalError> {
        check_lengths(points.len(), labels.len())?;
        let preds: Vec<f64> = points.iter().map(|p| p.prediction).collect();
        let truths: Vec<f64> = points.iter().map(|p| p.truth).collect();
        let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
        let (mae, mse) = mae_mse(&preds, &truths)?;
        let (f1, best_f1_threshold) = f1_sweep(&scores, labels)?;
        let auc_roc = auc_roc(&scores, labels)?;
        Ok(Self {
            mae,
            mse,
            f1,
            best_f1_threshold,
            auc_roc,
            mean_time_ms: 0.0,
            std_time_ms: 0.0,
            n_points: points.len(),
            n_anomalies: labels.iter().filter(|&&l| l).count(),
        })
    }
}

/// Streams the whole series through one contender; one entry per
/// observation, `None` while the contender is warming up.
pub fn run_contender(
    kind: ContenderKind,
    series: &LabeledSeries,
    options: &BenchmarkOptions,
) -> Result<Vec<Option<ScoredPoint>>, EvalError> {
    match kind {
        ContenderKind::OmlAd => {
            let mut det = PadDetector::new(options.detector)?;
            series
                .observations
                .iter()
                .map(|&o| det.score_learn(o).map_err(EvalError::from))
                .collect()
        }
        _ => {
            let mut model = options.baseline.build(kind)?;
            options.detector.validate()?;
            let stats = RunningStats::new(options.detector.error_stats)
                .expect("decay validated with the config");
            let mut scorer = ErrorScorer::new(options.detector.threshold_rule, stats)?;
            let mut out = Vec::with_capacity(series.len());
            for (i, o) in series.observations.iter().enumerate() {
                let threshold = scorer.threshold();
                let fitted = model.is_fitted();
                let prediction = model.step(o.value)?;
                // the first step has no history to predict from
                if i > 0 {
                    scorer.record_residual(o.value - prediction);
                }
                if fitted {
                    scorer.mark_scored();
                    out.push(Some(ScoredPoint::new(o.t, o.value, prediction, threshold)));
                } else {
                    out.push(None);
                }
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContenderReport {
    pub contender: ContenderKind,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub n_observations: usize,
    pub warmup: usize,
    pub repeats: usize,
    pub contenders: Vec<ContenderReport>,
}

impl BenchmarkReport {
    /// JSON without timing fields, so that reruns are byte-identical.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(rows) = value["contenders"].as_array_mut() {
            for row in rows {
                if let Some(m) = row["metrics"].as_object_mut() {
                    m.remove("mean_time_ms");
                    m.remove("std_time_ms");
                }
            }
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn to_json_with_timing(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn get(&self, kind: ContenderKind) -> Option<&MetricsReport> {
        self.contenders
            .iter()
            .find(|r| r.contender == kind)
            .map(|r| &r.metrics)
    }

    /// Fixed-width text table, one row per contender.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:>12} {:>12} {:>8} {:>8} {:>12} {:>10}",
            "contender", "MAE", "MSE", "F1", "AUC-ROC", "time ms", "std ms"
        );
        for row in &self.contenders {
            let m = &row.metrics;
            let _ = writeln!(
                s,
                "{:<20} {:>12.4} {:>12.4} {:>8.4} {:>8.4} {:>12.2} {:>10.2}",
                row.contender.name(),
                m.mae,
                m.mse,
                m.f1,
                m.auc_roc,
                m.mean_time_ms,
                m.std_time_ms
            );
        }
        s
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn evaluate(
    kind: ContenderKind,
    series: &LabeledSeries,
    options: &BenchmarkOptions,
    warmup: usize,
) -> Result<MetricsReport, EvalError> {
    let mut times = Vec::with_capacity(options.repeats);
    let mut first = None;
    for _ in 0..options.repeats {
        let start = Instant::now();
        let points = run_contender(kind, series, options)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        first.get_or_insert(points);
    }
    let points = first.expect("repeats >= 1");
    let mut kept = Vec::with_capacity(points.len().saturating_sub(warmup));
    let mut labels = Vec::with_capacity(kept.capacity());
    for (p, o) in points.iter().zip(&series.observations).skip(warmup) {
        // every contender is warm once the shared warmup has passed
        let p = p.expect("warmup covers every contender");
        kept.push(p);
        labels.push(o.label.unwrap_or(false));
    }
    let mut report = MetricsReport::from_points(&kept, &labels)?;
    (report.mean_time_ms, report.std_time_ms) = mean_std(&times);
    Ok(report)
}

/// Runs each contender over the series `repeats` times and reports metrics
/// from the first pass with timing over all passes. Rows follow the order
/// of `contenders`.
pub fn run_benchmark(
    series: &LabeledSeries,
    contenders: &[ContenderKind],
    options: &BenchmarkOptions,
) -> Result<BenchmarkReport, EvalError> {
    if contenders.is_empty() {
        return Err(EvalError::NoContenders);
    }
    if options.repeats == 0 {
        return Err(EvalError::NoRepeats);
    }
    options.detector.validate()?;
    let warmup = options.effective_warmup(contenders);
    if series.len() <= warmup {
        return Err(EvalError::TooShort {
            len: series.len(),
            warmup,
        });
    }
    let results: Vec<Result<MetricsReport, EvalError>> = if options.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = contenders
                .iter()
                .map(|&k| scope.spawn(move || evaluate(k, series, options, warmup)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("contender thread panicked"))
                .collect()
        })
    } else {
        contenders
            .iter()
            .map(|&k| evaluate(k, series, options, warmup))
            .collect()
    };
    let contenders = contenders
        .iter()
        .zip(results)
        .map(|(&contender, metrics)| {
            Ok(ContenderReport {
                contender,
                metrics: metrics?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(BenchmarkReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        dataset: series.meta.name.clone(),
        n_observations: series.len(),
        warmup,
        repeats: options.repeats,
        contenders,
    })
}

/// Orders contenders as listed in [`ContenderKind::ALL`] and drops repeats.
pub fn canonical_contenders(kinds: &[ContenderKind]) -> Vec<ContenderKind> {
    let mut v = kinds.to_vec();
    v.sort();
    v.dedup();
    v
}
