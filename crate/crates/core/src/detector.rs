//! Prediction-based anomaly detection on a stream.
//!
//! Each observation goes through
//! `difference -> standardize -> forecast -> error -> threshold -> score`.
//! The forecast for `x_t` is produced before `x_t` is seen, mapped back to
//! the original scale, and compared with the truth. The score is
//! `min(|x_hat - x| / tau, 1)` where `tau` comes from the configured
//! [`ThresholdRule`] applied to running statistics of past residuals.
//!
//! Raw values are differenced first and the differenced series is
//! standardized, so the forecaster always sees a roughly unit-scale input
//! and the differencing history stays on the original scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecast::{Differencer, ForecastError, SnarimaxModel};
use crate::stats::{OnlineScaler, RunningStats, StatsError};
use crate::thresholds::Thresholder;
use crate::types::anomaly_score;
use crate::{ConfigError, DetectorConfig, Observation, ScoredPoint, ThresholdRule};

pub const STATE_FORMAT: &str = "omlad-detector-state";
pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("non-finite value at tick {0}")]
    NonFiniteInput(i64),
    #[error("tick {got} does not follow previous tick {previous}")]
    NonMonotoneTick { previous: i64, got: i64 },
    #[error("malformed state record: {0}")]
    MalformedRecord(String),
}

/// Running residual statistics turned into scores.
///
/// Shared by the online detector and the batch baselines so that every
/// contender is scored the same way. Residuals are signed (`truth -
/// prediction`); the score uses their absolute value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorScorer {
    rule: ThresholdRule,
    #[serde(skip)]
    thresholder: Option<Thresholder>,
    stats: RunningStats,
    scored: u64,
}

impl ErrorScorer {
    pub fn new(rule: ThresholdRule, stats: RunningStats) -> Result<Self, ConfigError> {
        rule.validate()?;
        let thresholder =
            Thresholder::new(rule).map_err(|e| ConfigError::InvalidRule(e.to_string()))?;
        Ok(Self {
            rule,
            thresholder: Some(thresholder),
            stats,
            scored: 0,
        })
    }

    fn thresholder(&mut self) -> Thresholder {
        match self.thresholder {
            Some(t) => t,
            None => {
                let t = Thresholder::new(self.rule).expect("rule validated at construction");
                self.thresholder = Some(t);
                t
            }
        }
    }

    /// Threshold for the next point, from the statistics seen so far.
    pub fn threshold(&mut self) -> f64 {
        let scored = self.scored;
        self.thresholder().threshold(&self.stats, scored)
    }

    pub fn stats(&self) -> &RunningStats {
        &self.stats
    }

    pub fn scored(&self) -> u64 {
        self.scored
    }

    pub fn record_residual(&mut self, residual: f64) {
        // residual is finite whenever prediction and truth are
        let _ = self.stats.update(residual);
    }

    pub fn mark_scored(&mut self) {
        self.scored += 1;
    }
}

/// Online seasonal ARIMA anomaly detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PadDetector {
    config: DetectorConfig,
    scaler: OnlineScaler,
    differencer: Differencer,
    model: SnarimaxModel,
    scorer: ErrorScorer,
    seen: u64,
    last_tick: Option<i64>,
    skipped_updates: u64,
}

/// Serialized detector with a format tag and version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateRecord {
    pub format: String,
    pub version: u32,
    pub detector: PadDetector,
}

impl PadDetector {
    pub fn new(config: DetectorConfig) -> Result<Self, DetectorError> {
        config.validate()?;
        let o = config.orders;
        let error_stats = RunningStats::new(config.error_stats).map_err(|_| {
            ConfigError::InvalidDecay(config.error_stats.lambda().unwrap_or(f64::NAN))
        })?;
        Ok(Self {
            config,
            scaler: OnlineScaler::new(),
            differencer: Differencer::new(o.d, o.sd, config.season),
            model: SnarimaxModel::new(o.p, o.q, o.sp, o.sq, config.season, config.learning_rate),
            scorer: ErrorScorer::new(config.threshold_rule, error_stats)?,
            seen: 0,
            last_tick: None,
            skipped_updates: 0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn model(&self) -> &SnarimaxModel {
        &self.model
    }

    pub fn error_stats(&self) -> &RunningStats {
        self.scorer.stats()
    }

    /// Observations consumed so far.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn points_scored(&self) -> u64 {
        self.scorer.scored()
    }

    pub fn last_tick(&self) -> Option<i64> {
        self.last_tick
    }

    /// Weight updates skipped because they would have become non-finite.
    pub fn skipped_updates(&self) -> u64 {
        self.skipped_updates
    }

    /// Forecast of the next value on the original scale, if the
    /// differencing history is complete.
    ///
    /// A diverged model (non-finite output) forecasts the running mean of
    /// the differenced series instead.
    pub fn forecast(&self) -> Option<f64> {
        let z = self.model.predict();
        let z = if z.is_finite() { z } else { 0.0 };
        let y = self.scaler.inverse_transform(z);
        self.differencer.invert(y).ok()
    }

    /// Scores `obs` against the forecast made before seeing it, then learns
    /// from it. Returns `None` during warmup.
    pub fn score_learn(&mut self, obs: Observation) -> Result<Option<ScoredPoint>, DetectorError> {
        if !obs.value.is_finite() {
            return Err(DetectorError::NonFiniteInput(obs.t));
        }
        if let Some(previous) = self.last_tick {
            if obs.t <= previous {
                return Err(DetectorError::NonMonotoneTick {
                    previous,
                    got: obs.t,
                });
            }
        }
        self.last_tick = Some(obs.t);
        self.seen += 1;
        let in_warmup = self.seen <= self.config.warmup as u64;

        let prediction = self.forecast();
        let differenced = self
            .differencer
            .apply(obs.value)
            .map_err(|_| DetectorError::NonFiniteInput(obs.t))?;

        let Some(prediction) = prediction else {
            if let Some(y) = differenced {
                self.learn_differenced(y, true);
            }
            return Ok(None);
        };
        let y = differenced.expect("differencer ready once a forecast exists");

        let threshold = self.scorer.threshold();
        let error = (prediction - obs.value).abs();
        let flagged = anomaly_score(error, threshold) >= 1.0;
        let learn = in_warmup || self.config.learn_on_anomaly || !flagged;
        if learn {
            self.scorer.record_residual(obs.value - prediction);
        }
        self.learn_differenced(y, learn);

        if in_warmup {
            return Ok(None);
        }
        self.scorer.mark_scored();
        Ok(Some(ScoredPoint::new(
            obs.t, obs.value, prediction, threshold,
        )))
    }

    fn learn_differenced(&mut self, y: f64, update: bool) {
        let outcome = if update {
            match self.scaler.learn_transform(y) {
                Ok(z) => self.model.learn(z),
                Err(StatsError::NonFiniteInput | StatsError::InvalidDecay) => {
                    Err(ForecastError::NonFiniteInput)
                }
            }
        } else {
            self.model.observe(self.scaler.transform(y))
        };
        if outcome.is_err() {
            self.skipped_updates += 1;
        }
    }

    /// Scores a whole slice, collecting the emitted points.
    pub fn score_all(
        &mut self,
        observations: &[Observation],
    ) -> Result<Vec<ScoredPoint>, DetectorError> {
        let mut out = Vec::new();
        for &obs in observations {
            if let Some(p) = self.score_learn(obs)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> StateRecord {
        StateRecord {
            format: STATE_FORMAT.to_string(),
            version: STATE_VERSION,
            detector: self.clone(),
        }
    }

    pub fn restore(record: StateRecord) -> Result<Self, DetectorError> {
        if record.format != STATE_FORMAT {
            return Err(DetectorError::MalformedRecord(format!(
                "unexpected format tag {:?}",
                record.format
            )));
        }
        if record.version != STATE_VERSION {
            return Err(DetectorError::MalformedRecord(format!(
                "unsupported version {}",
                record.version
            )));
        }
        let det = record.detector;
        det.config.validate()?;
        let o = det.config.orders;
        let expected_weights = o.p + o.q + o.sp + o.sq + 1;
        if det.model.weights().len() != expected_weights
            || det.differencer.orders() != (o.d, o.sd, det.config.season.max(1))
        {
            return Err(DetectorError::MalformedRecord(
                "model shape does not match configuration".into(),
            ));
        }
        let (ny, ne) = det.model.buffer_lens();
        if ny > det.model.y_capacity() || ne > det.model.e_capacity() {
            return Err(DetectorError::MalformedRecord(
                "buffer exceeds capacity".into(),
            ));
        }
        if det.model.weights().iter().any(|w| !w.is_finite()) {
            return Err(DetectorError::MalformedRecord("non-finite weight".into()));
        }
        Ok(det)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.snapshot()).expect("detector state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, DetectorError> {
        let record: StateRecord =
            serde_json::from_str(s).map_err(|e| DetectorError::MalformedRecord(e.to_string()))?;
        Self::restore(record)
    }
}
