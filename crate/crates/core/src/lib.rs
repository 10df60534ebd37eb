//! Online prediction-based anomaly detection for non-stationary time series.
//!
//! The pipeline is built from small, independently testable pieces:
//!
//! * [`stats`]: single-pass mean/variance estimators and an online scaler.
//! * [`forecast`]: differencing, the online seasonal ARIMA model trained by
//!   gradient descent, and a windowed least-squares AR batch baseline.
//! * [`thresholds`]: conversion of error statistics into a score threshold.
//! * [`detector`]: the composition that turns a stream of observations into
//!   anomaly scores in `[0, 1]`.
//! * [`drift`]: the ADWIN change detector used for dynamic retraining.
//! * [`eval`]: metrics and the benchmark runner.
//! * [`dataio`]: CSV ingestion, synthetic data and anomaly injection.

pub mod dataio;
pub mod detector;
pub mod drift;
pub mod eval;
pub mod forecast;
pub mod rng;
pub mod stats;
pub mod thresholds;
mod types;

pub use detector::{PadDetector, StateRecord};
pub use types::{ConfigError, DetectorConfig, Observation, Orders, ScoredPoint, ThresholdRule};

/// Lower bound applied to every standard deviation and threshold.
pub const EPS_FLOOR: f64 = 1e-9;
