//! ADWIN adaptive windowing change detector.
//!
//! The window is stored as an exponential histogram: row `r` holds at most
//! `max_buckets` buckets, each summarizing `2^r` consecutive elements by
//! their sum and within-bucket squared deviation. When a row overflows, its
//! two oldest buckets merge into one bucket of the next row. Every `clock`
//! updates, all bucket boundaries are tried as split points between an older
//! sub-window `W0` and a newer `W1`; if their means differ by at least
//!
//! ```text
//! eps_cut = sqrt(2/m * var_W * ln(2/delta')) + 2/(3m) * ln(2/delta')
//! m = 1 / (1/n0 + 1/n1),   delta' = delta / |W|
//! ```
//!
//! the oldest bucket is dropped and the scan repeats.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DriftError {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("invalid ADWIN parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdwinParams {
    pub delta: f64,
    pub max_buckets: usize,
    pub grace_period: u64,
    pub min_window_length: u64,
    pub clock: u64,
}

impl Default for AdwinParams {
    fn default() -> Self {
        Self {
            delta: 0.001,
            max_buckets: 10,
            grace_period: 10,
            min_window_length: 10,
            clock: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bucket {
    sum: f64,
    /// Sum of squared deviations from the bucket mean.
    m2: f64,
}

/// Outcome of one [`Adwin::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdwinUpdate {
    pub drift: bool,
    pub width: u64,
}

#[derive(Debug, Clone)]
pub struct Adwin {
    params: AdwinParams,
    /// `rows[r]` holds buckets of `2^r` elements, oldest at the front.
    rows: Vec<VecDeque<Bucket>>,
    updates: u64,
    width: u64,
    total: f64,
    /// Sum of squared deviations of the whole window.
    m2: f64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(AdwinParams::default()).expect("default parameters are valid")
    }
}

impl Adwin {
    pub fn new(params: AdwinParams) -> Result<Self, DriftError> {
        if !(params.delta > 0.0 && params.delta < 1.0) {
            return Err(DriftError::InvalidParameter("delta must lie in (0, 1)"));
        }
        if params.max_buckets < 2 {
            return Err(DriftError::InvalidParameter("max_buckets must be >= 2"));
        }
        if params.clock == 0 {
            return Err(DriftError::InvalidParameter("clock must be >= 1"));
        }
        Ok(Self {
            params,
            rows: vec![VecDeque::new()],
            updates: 0,
            width: 0,
            total: 0.0,
            m2: 0.0,
            detections: 0,
        })
    }

    pub fn with_delta(delta: f64) -> Result<Self, DriftError> {
        Self::new(AdwinParams {
            delta,
            ..AdwinParams::default()
        })
    }

    pub fn params(&self) -> &AdwinParams {
        &self.params
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    /// Population variance of the current window.
    pub fn variance(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            (self.m2 / self.width as f64).max(0.0)
        }
    }

    pub fn detections(&self) -> u64 {
        self.detections
    }

    /// Number of bucket rows in use.
    pub fn row_count(&self) -> usize {
        self.rows
            .iter()
            .rposition(|r| !r.is_empty())
            .map_or(0, |i| i + 1)
    }

    pub fn bucket_count(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    /// Capacity of the largest bucket held.
    pub fn largest_bucket(&self) -> u64 {
        match self.row_count() {
            0 => 0,
            n => 1 << (n - 1),
        }
    }

    pub fn update(&mut self, x: f64) -> Result<AdwinUpdate, DriftError> {
        if !x.is_finite() {
            return Err(DriftError::NonFiniteInput);
        }
        self.updates += 1;
        self.insert(x);
        let drift = self.updates.is_multiple_of(self.params.clock)
            && self.updates >= self.params.grace_period
            && self.detect();
        if drift {
            self.detections += 1;
        }
        Ok(AdwinUpdate {
            drift,
            width: self.width,
        })
    }

    fn insert(&mut self, x: f64) {
        if self.width > 0 {
            let w = self.width as f64;
            let d = x - self.total / w;
            self.m2 += w * d * d / (w + 1.0);
        }
        self.width += 1;
        self.total += x;
        self.rows[0].push_back(Bucket { sum: x, m2: 0.0 });
        self.compress();
    }

    fn compress(&mut self) {
        let mut r = 0;
        while self.rows[r].len() > self.params.max_buckets {
            let a = self.rows[r].pop_front().expect("row overflowed");
            let b = self.rows[r].pop_front().expect("row overflowed");
            let n = (1u64 << r) as f64;
            let diff = a.sum / n - b.sum / n;
            let merged = Bucket {
                sum: a.sum + b.sum,
                m2: a.m2 + b.m2 + n * n * diff * diff / (2.0 * n),
            };
            if self.rows.len() == r + 1 {
                self.rows.push(VecDeque::new());
            }
            self.rows[r + 1].push_back(merged);
            r += 1;
        }
    }

    /// Scans split points; drops the oldest bucket while a cut holds.
    fn detect(&mut self) -> bool {
        let mut detected = false;
        while self.find_cut() {
            detected = true;
            self.drop_oldest();
        }
        detected
    }

    fn find_cut(&self) -> bool {
        let min_len = self.params.min_window_length.max(1);
        if self.width < 2 * min_len {
            return false;
        }
        let width = self.width as f64;
        let var_w = self.m2 / width;
        let ln_term = (2.0 * width / self.params.delta).ln();
        let mut n0 = 0u64;
        let mut u0 = 0.0;
        // oldest buckets sit at the front of the highest rows
        for r in (0..self.rows.len()).rev() {
            let cap = 1u64 << r;
            for b in &self.rows[r] {
                n0 += cap;
                u0 += b.sum;
                let n1 = self.width - n0;
                if n1 < min_len {
                    return false;
                }
                if n0 < min_len {
                    continue;
                }
                let (f0, f1) = (n0 as f64, n1 as f64);
                let inv_m = 1.0 / f0 + 1.0 / f1;
                let eps = (2.0 * inv_m * var_w * ln_term).sqrt() + 2.0 / 3.0 * inv_m * ln_term;
                let gap = (u0 / f0 - (self.total - u0) / f1).abs();
                if gap >= eps {
                    return true;
                }
            }
        }
        false
    }

    fn drop_oldest(&mut self) {
        let Some(r) = self.rows.iter().rposition(|row| !row.is_empty()) else {
            return;
        };
        let b = self.rows[r].pop_front().expect("row is non-empty");
        let nb = (1u64 << r) as f64;
        let rest = (self.width - (1u64 << r)) as f64;
        if rest > 0.0 {
            let mu_b = b.sum / nb;
            let mu_rest = (self.total - b.sum) / rest;
            let d = mu_rest - mu_b;
            self.m2 -= b.m2 + rest * nb * d * d / (rest + nb);
            self.m2 = self.m2.max(0.0);
        } else {
            self.m2 = 0.0;
        }
        self.width -= 1u64 << r;
        self.total -= b.sum;
        let used = self.row_count().max(1);
        self.rows.truncate(used);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn constant_stream_never_drifts() {
        let mut a = Adwin::default();
        for _ in 0..10_000 {
            assert!(!a.update(0.5).unwrap().drift);
        }
        assert_eq!(a.width(), 10_000);
        assert_eq!(a.mean(), 0.5);
    }

    #[test]
    fn width_and_mean() {
        let mut a = Adwin::default();
        for _ in 0..5 {
            a.update(1.0).unwrap();
        }
        assert_eq!(a.width(), 5);
        assert_eq!(a.mean(), 1.0);
        assert_eq!(Adwin::default().mean(), 0.0);
    }

    #[test]
    fn drift_shrinks_window() {
        let mut a = Adwin::default();
        let mut rng = SeededRng::new(1);
        for _ in 0..1000 {
            a.update(rng.normal() * 0.1).unwrap();
        }
        let before = a.width();
        let mut shrunk = false;
        for _ in 0..200 {
            let u = a.update(5.0 + rng.normal() * 0.1).unwrap();
            if u.drift {
                shrunk = true;
                break;
            }
        }
        assert!(shrunk);
        assert!(a.width() < before);
        assert!(a.width() >= a.params().min_window_length);
    }

    #[test]
    fn window_variance_matches_retained_elements() {
        let mut a = Adwin::default();
        let mut rng = SeededRng::new(9);
        let mut xs = Vec::new();
        for i in 0..3000 {
            let x = rng.normal() + if i > 1500 { 3.0 } else { 0.0 };
            xs.push(x);
            a.update(x).unwrap();
        }
        let kept = &xs[xs.len() - a.width() as usize..];
        let n = kept.len() as f64;
        let mean = kept.iter().sum::<f64>() / n;
        let var = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((a.mean() - mean).abs() < 1e-9);
        assert!((a.variance() - var).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_input_and_params() {
        let mut a = Adwin::default();
        assert_eq!(a.update(f64::NAN), Err(DriftError::NonFiniteInput));
        assert!(Adwin::with_delta(0.0).is_err());
    }
}
