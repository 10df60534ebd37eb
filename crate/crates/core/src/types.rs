use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::StatsMode;

/// A single point of a univariate stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Monotone tick. Ticks must strictly increase within one stream.
    pub t: i64,
    pub value: f64,
    /// Ground-truth anomaly label, when known.
    pub label: Option<bool>,
}

impl Observation {
    pub fn new(t: i64, value: f64) -> Self {
        Self {
            t,
            value,
            label: None,
        }
    }

    pub fn labeled(t: i64, value: f64, label: bool) -> Self {
        Self {
            t,
            value,
            label: Some(label),
        }
    }
}

/// Output record of the detector for one post-warmup observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPoint {
    pub t: i64,
    pub truth: f64,
    pub prediction: f64,
    pub error: f64,
    pub threshold: f64,
    pub score: f64,
}

impl ScoredPoint {
    /// Builds a record from a forecast and its threshold.
    ///
    /// `error = |prediction - truth|` and `score = min(error / threshold, 1)`,
    /// with the clamp decided by `error >= threshold` so that a score of 1
    /// holds exactly when the error reaches the threshold.
    pub fn new(t: i64, truth: f64, prediction: f64, threshold: f64) -> Self {
        let error = (prediction - truth).abs();
        Self {
            t,
            truth,
            prediction,
            error,
            threshold,
            score: anomaly_score(error, threshold),
        }
    }

    pub fn is_flagged(&self) -> bool {
        self.score >= 1.0
    }
}

/// `min(error / threshold, 1)`.
#[inline]
pub fn anomaly_score(error: f64, threshold: f64) -> f64 {
    if error >= threshold {
        1.0
    } else {
        error / threshold
    }
}

/// How running error statistics are turned into the threshold `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `tau = mu + c * sigma`.
    MeanSigma { c: f64 },
    /// `tau = q_{1-alpha} * sigma_hat` with `q` the half-normal quantile.
    GaussianQuantile { alpha: f64 },
    /// Extreme-value threshold bounding the false-positive probability over
    /// `n` residuals. `None` uses the number of scored points so far.
    GumbelQuantile { alpha: f64, n: Option<u64> },
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::MeanSigma { c: 3.0 }
    }
}

/// Non-seasonal and seasonal orders `(p, d, q)(P, D, Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orders {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    #[serde(rename = "P")]
    pub sp: usize,
    #[serde(rename = "D")]
    pub sd: usize,
    #[serde(rename = "Q")]
    pub sq: usize,
}

impl Orders {
    pub fn new(p: usize, d: usize, q: usize, sp: usize, sd: usize, sq: usize) -> Self {
        Self {
            p,
            d,
            q,
            sp,
            sd,
            sq,
        }
    }

    /// Builds orders from signed values, e.g. parsed from user input.
    pub fn from_signed(values: [i64; 6]) -> Result<Self, ConfigError> {
        const NAMES: [&str; 6] = ["p", "d", "q", "P", "D", "Q"];
        let mut out = [0usize; 6];
        for (i, v) in values.iter().enumerate() {
            out[i] = usize::try_from(*v).map_err(|_| ConfigError::InvalidOrder {
                field: NAMES[i],
                value: *v,
            })?;
        }
        Ok(Self::new(out[0], out[1], out[2], out[3], out[4], out[5]))
    }

    fn is_seasonal(&self) -> bool {
        self.sp > 0 || self.sd > 0 || self.sq > 0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid order {field} = {value}: orders must be non-negative")]
    InvalidOrder { field: &'static str, value: i64 },
    #[error("invalid season s = {season}: seasonal orders require s >= 2 (and s >= 1 always)")]
    InvalidSeason { season: usize },
    #[error("invalid learning rate {0}: must be finite and > 0")]
    InvalidRate(f64),
    #[error("invalid threshold rule: {0}")]
    InvalidRule(String),
    #[error("warmup {warmup} is shorter than the differencing span {required}")]
    InvalidWarmup { warmup: usize, required: usize },
    #[error("invalid error statistics decay {0}: must lie in (0, 1)")]
    InvalidDecay(f64),
}

/// Full configuration of a [`crate::PadDetector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub orders: Orders,
    pub season: usize,
    pub learning_rate: f64,
    pub threshold_rule: ThresholdRule,
    /// Observations consumed before scores are emitted.
    pub warmup: usize,
    /// When false, points scored 1 update neither the model weights nor the
    /// error statistics.
    pub learn_on_anomaly: bool,
    /// Recency rule of the error statistics feeding the threshold.
    pub error_stats: StatsMode,
}

impl Default for DetectorConfig {
    /// `(2,1,2)(2,0,2)_52`, learning rate 0.001, `tau = mu + 3 sigma`.
    fn default() -> Self {
        let orders = Orders::new(2, 1, 2, 2, 0, 2);
        let season = 52;
        Self {
            orders,
            season,
            learning_rate: 0.001,
            threshold_rule: ThresholdRule::default(),
            warmup: Self::span(&orders, season),
            learn_on_anomaly: true,
            error_stats: StatsMode::ExponentialDecay { lambda: 0.01 },
        }
    }
}

impl DetectorConfig {
    /// Differencing span `d + D*s` plus the longest lag of the model.
    fn span(orders: &Orders, season: usize) -> usize {
        let max_lag = orders
            .p
            .max(orders.q)
            .max(orders.sp * season)
            .max(orders.sq * season);
        Self::differencing_span(orders, season) + max_lag
    }

    fn differencing_span(orders: &Orders, season: usize) -> usize {
        orders.d + orders.sd * season
    }

    /// Recommended warmup for the given orders: differencing history plus the
    /// longest lag buffer.
    pub fn recommended_warmup(&self) -> usize {
        Self::span(&self.orders, self.season)
    }

    pub fn differencing_order(&self) -> usize {
        Self::differencing_span(&self.orders, self.season)
    }

    /// Checks every invariant, reporting the first violated field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.season == 0 || (self.orders.is_seasonal() && self.season < 2) {
            return Err(ConfigError::InvalidSeason {
                season: self.season,
            });
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ConfigError::InvalidRate(self.learning_rate));
        }
        self.threshold_rule.validate()?;
        let required = self.differencing_order();
        if self.warmup < required {
            return Err(ConfigError::InvalidWarmup {
                warmup: self.warmup,
                required,
            });
        }
        self.error_stats
            .validate()
            .map_err(|_| ConfigError::InvalidDecay(self.error_stats.lambda().unwrap_or(f64::NAN)))
    }
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let alpha_ok = |a: f64| a > 0.0 && a < 1.0;
        match *self {
            ThresholdRule::MeanSigma { c } if !(c.is_finite() && c > 0.0) => {
                Err(ConfigError::InvalidRule(format!("c = {c} must be > 0")))
            }
            ThresholdRule::GaussianQuantile { alpha } if !alpha_ok(alpha) => Err(
                ConfigError::InvalidRule(format!("alpha = {alpha} must lie in (0, 1)")),
            ),
            ThresholdRule::GumbelQuantile { alpha, .. } if !alpha_ok(alpha) => Err(
                ConfigError::InvalidRule(format!("alpha = {alpha} must lie in (0, 1)")),
            ),
            ThresholdRule::GumbelQuantile { n: Some(0), .. } => {
                Err(ConfigError::InvalidRule("n must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(orders: Orders, season: usize, lr: f64) -> DetectorConfig {
        DetectorConfig {
            orders,
            season,
            learning_rate: lr,
            warmup: 200,
            ..DetectorConfig::default()
        }
    }

    #[test]
    fn paper_configuration_is_valid() {
        let c = cfg(Orders::new(2, 1, 2, 2, 0, 2), 52, 0.001);
        assert_eq!(c.validate(), Ok(()));
        assert_eq!(DetectorConfig::default().validate(), Ok(()));
        assert_eq!(DetectorConfig::default().warmup, 105);
    }

    #[test]
    fn degenerate_model_is_valid() {
        let c = cfg(Orders::new(0, 0, 0, 0, 0, 0), 1, 0.001);
        assert_eq!(c.validate(), Ok(()));
    }

    #[test]
    fn seasonal_order_needs_season() {
        let c = cfg(Orders::new(0, 0, 0, 1, 0, 0), 1, 0.001);
        assert_eq!(c.validate(), Err(ConfigError::InvalidSeason { season: 1 }));
    }

    #[test]
    fn negative_order_rejected() {
        assert_eq!(
            Orders::from_signed([1, -1, 0, 0, 0, 0]),
            Err(ConfigError::InvalidOrder {
                field: "d",
                value: -1
            })
        );
    }

    #[test]
    fn bad_rate_and_rule() {
        assert!(matches!(
            cfg(Orders::new(1, 0, 0, 0, 0, 0), 1, 0.0).validate(),
            Err(ConfigError::InvalidRate(_))
        ));
        let mut c = cfg(Orders::new(1, 0, 0, 0, 0, 0), 1, 0.1);
        c.threshold_rule = ThresholdRule::GaussianQuantile { alpha: 1.0 };
        assert!(matches!(c.validate(), Err(ConfigError::InvalidRule(_))));
    }

    #[test]
    fn warmup_must_cover_differencing() {
        let mut c = cfg(Orders::new(0, 1, 0, 0, 1, 0), 12, 0.1);
        c.warmup = 12;
        assert_eq!(
            c.validate(),
            Err(ConfigError::InvalidWarmup {
                warmup: 12,
                required: 13
            })
        );
    }

    #[test]
    fn score_clamps_at_threshold() {
        let p = ScoredPoint::new(0, 1.0, 1.0, 2.0);
        assert_eq!(p.score, 0.0);
        let p = ScoredPoint::new(0, 0.0, 2.0, 2.0);
        assert_eq!(p.score, 1.0);
        assert!(p.is_flagged());
        let p = ScoredPoint::new(0, 0.0, -1.0, 4.0);
        assert_eq!(p.error, 1.0);
        assert_eq!(p.score, 0.25);
    }
}
