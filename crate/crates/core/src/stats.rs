//! Single-pass first and second moment estimators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::EPS_FLOOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("decay must lie in (0, 1)")]
    InvalidDecay,
}

/// Weighting of past observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum StatsMode {
    /// Every observation weighs the same (Welford).
    Global,
    /// Exponentially weighted: `mean <- (1 - lambda) mean + lambda x`.
    ExponentialDecay { lambda: f64 },
}

impl StatsMode {
    pub fn validate(&self) -> Result<(), StatsError> {
        match *self {
            StatsMode::Global => Ok(()),
            StatsMode::ExponentialDecay { lambda } if lambda > 0.0 && lambda < 1.0 => Ok(()),
            StatsMode::ExponentialDecay { .. } => Err(StatsError::InvalidDecay),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            StatsMode::Global => None,
            StatsMode::ExponentialDecay { lambda } => Some(lambda),
        }
    }
}

/// Running mean and population variance.
///
/// In `Global` mode `m2` is the sum of squared deviations from the mean. In
/// `ExponentialDecay` mode it holds the exponentially weighted variance
/// itself. Either way `m2 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
    mode: StatsMode,
}

impl Default for RunningStats {
    fn default() -> Self {
        Self::global()
    }
}

impl RunningStats {
    pub fn new(mode: StatsMode) -> Result<Self, StatsError> {
        mode.validate()?;
        Ok(Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            mode,
        })
    }

    pub fn global() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            mode: StatsMode::Global,
        }
    }

    pub fn exponential(lambda: f64) -> Result<Self, StatsError> {
        Self::new(StatsMode::ExponentialDecay { lambda })
    }

    pub fn update(&mut self, x: f64) -> Result<(), StatsError> {
        if !x.is_finite() {
            return Err(StatsError::NonFiniteInput);
        }
        self.count += 1;
        match self.mode {
            StatsMode::Global => {
                let delta = x - self.mean;
                self.mean += delta / self.count as f64;
                self.m2 += delta * (x - self.mean);
            }
            StatsMode::ExponentialDecay { lambda } => {
                if self.count == 1 {
                    self.mean = x;
                    self.m2 = 0.0;
                } else {
                    let delta = x - self.mean;
                    let incr = lambda * delta;
                    self.mean += incr;
                    self.m2 = (1.0 - lambda) * (self.m2 + delta * incr);
                }
            }
        }
        // Rounding in the Welford update can leave m2 a hair below zero.
        if self.m2 < 0.0 {
            self.m2 = 0.0;
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mode(&self) -> StatsMode {
        self.mode
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance; zero before the first update.
    pub fn variance(&self) -> f64 {
        match (self.count, self.mode) {
            (0, _) => 0.0,
            (n, StatsMode::Global) => self.m2 / n as f64,
            (_, StatsMode::ExponentialDecay { .. }) => self.m2,
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Root of the raw second moment, i.e. the standard deviation around a
    /// mean fixed at zero.
    pub fn zero_mean_std(&self) -> f64 {
        (self.variance() + self.mean * self.mean).sqrt()
    }
}

/// Incremental standardization of a stream.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OnlineScaler {
    stats: RunningStats,
}

impl OnlineScaler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> &RunningStats {
        &self.stats
    }

    fn scale(&self) -> f64 {
        self.stats.std().max(EPS_FLOOR)
    }

    pub fn learn(&mut self, x: f64) -> Result<(), StatsError> {
        self.stats.update(x)
    }

    /// Updates with `x`, then standardizes it with the updated statistics.
    pub fn learn_transform(&mut self, x: f64) -> Result<f64, StatsError> {
        self.learn(x)?;
        Ok(self.transform(x))
    }

    /// Identity until the first update.
    pub fn transform(&self, x: f64) -> f64 {
        if self.stats.count() == 0 {
            x
        } else {
            (x - self.stats.mean()) / self.scale()
        }
    }

    pub fn inverse_transform(&self, z: f64) -> f64 {
        if self.stats.count() == 0 {
            z
        } else {
            z * self.scale() + self.stats.mean()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feed(mut st: RunningStats, xs: &[f64]) -> RunningStats {
        for &x in xs {
            st.update(x).unwrap();
        }
        st
    }

    #[test]
    fn global_textbook_example() {
        let st = feed(
            RunningStats::global(),
            &[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0],
        );
        assert_eq!(st.mean(), 5.0);
        assert_eq!(st.variance(), 4.0);
        assert_eq!(st.std(), 2.0);
    }

    #[test]
    fn single_and_empty() {
        let st = feed(RunningStats::global(), &[3.0]);
        assert_eq!((st.mean(), st.variance()), (3.0, 0.0));
        let empty = RunningStats::global();
        assert_eq!((empty.mean(), empty.std()), (0.0, 0.0));
        let ones = feed(RunningStats::global(), &[1.0, 1.0, 1.0]);
        assert_eq!((ones.mean(), ones.std()), (1.0, 0.0));
        let two = feed(RunningStats::global(), &[0.0, 2.0]);
        assert_eq!((two.mean(), two.std()), (1.0, 1.0));
    }

    #[test]
    fn exponential_decay_recursion() {
        let st = feed(RunningStats::exponential(0.5).unwrap(), &[0.0, 4.0]);
        assert_eq!(st.mean(), 2.0);
        // (1 - 0.5) * (0 + 4 * 2)
        assert_eq!(st.variance(), 4.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut st = RunningStats::global();
        assert_eq!(st.update(f64::NAN), Err(StatsError::NonFiniteInput));
        assert_eq!(st.update(f64::INFINITY), Err(StatsError::NonFiniteInput));
        assert_eq!(st.count(), 0);
        assert_eq!(
            RunningStats::exponential(1.0),
            Err(StatsError::InvalidDecay)
        );
    }

    #[test]
    fn scaler_examples() {
        let mut sc = OnlineScaler::new();
        assert_eq!(sc.transform(5.0), 5.0);
        assert_eq!(sc.learn_transform(5.0).unwrap(), 0.0);

        let mut sc = OnlineScaler::new();
        sc.learn_transform(0.0).unwrap();
        assert_eq!(sc.learn_transform(10.0).unwrap(), 1.0);

        let mut sc = OnlineScaler::new();
        for _ in 0..3 {
            assert_eq!(sc.learn_transform(7.0).unwrap(), 0.0);
        }
    }

    proptest! {
        #[test]
        fn global_matches_two_pass(xs in prop::collection::vec(-1e6f64..1e6, 1..2000)) {
            let st = feed(RunningStats::global(), &xs);
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let scale = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            prop_assert!((st.mean() - mean).abs() <= 1e-9 * scale);
            prop_assert!((st.variance() - var).abs() <= 1e-9 * var.max(1.0));
            prop_assert!(st.variance() >= 0.0);
        }

        #[test]
        fn replay_is_bit_identical(xs in prop::collection::vec(-1e3f64..1e3, 0..200)) {
            let a = feed(RunningStats::exponential(0.01).unwrap(), &xs);
            let b = feed(RunningStats::exponential(0.01).unwrap(), &xs);
            prop_assert_eq!(a, b);
            prop_assert!(a.variance() >= 0.0);
        }

        #[test]
        fn scaler_inverse(xs in prop::collection::vec(-1e3f64..1e3, 2..100), probe in -1e3f64..1e3) {
            let mut sc = OnlineScaler::new();
            for &x in &xs {
                sc.learn(x).unwrap();
            }
            prop_assume!(sc.stats().std() > EPS_FLOOR);
            let back = sc.inverse_transform(sc.transform(probe));
            prop_assert!((back - probe).abs() <= 1e-12 * probe.abs().max(1.0));
        }
    }
}
