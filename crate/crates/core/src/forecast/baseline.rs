use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::ForecastError;
use crate::drift::{Adwin, AdwinParams};

const RIDGE_JITTER: f64 = 1e-8;

/// When the batch baseline refits its coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetrainPolicy {
    /// Fit once, when the window first fills.
    None,
    /// Refit every `period` observations after the first fit.
    Scheduled { period: usize },
    /// Refit whenever ADWIN reports drift in the absolute prediction errors.
    Dynamic(AdwinParams),
}

/// Autoregression fit by least squares on a sliding window of raw values,
/// optionally after seasonal differencing `x_t - x_{t-s}`.
///
/// Coefficients change only at fit events. Until the first fit the
/// prediction is the last observed value.
#[derive(Debug, Clone)]
pub struct WindowedArBaseline {
    order: usize,
    season: Option<usize>,
    capacity: usize,
    window: VecDeque<f64>,
    /// `[c0, c1, .., c_p]`.
    coefficients: Option<Vec<f64>>,
    policy: RetrainPolicy,
    adwin: Option<Adwin>,
    seen: usize,
    refits: usize,
}

impl WindowedArBaseline {
    pub fn new(
        order: usize,
        season: Option<usize>,
        window: usize,
        policy: RetrainPolicy,
    ) -> Result<Self, ForecastError> {
        if matches!(season, Some(s) if s < 1) {
            return Err(ForecastError::InvalidBaseline("season must be >= 1"));
        }
        let lag = season.unwrap_or(0);
        if window < lag + order + 1 {
            return Err(ForecastError::InvalidBaseline(
                "window must exceed seasonal lag plus AR order",
            ));
        }
        let adwin = match policy {
            RetrainPolicy::Dynamic(params) => Some(
                Adwin::new(params)
                    .map_err(|_| ForecastError::InvalidBaseline("ADWIN parameters"))?,
            ),
            RetrainPolicy::Scheduled { period: 0 } => {
                return Err(ForecastError::InvalidBaseline(
                    "schedule period must be >= 1",
                ))
            }
            _ => None,
        };
        Ok(Self {
            order,
            season,
            capacity: window,
            window: VecDeque::with_capacity(window),
            coefficients: None,
            policy,
            adwin,
            seen: 0,
            refits: 0,
        })
    }

    /// Observations consumed before the first fit.
    pub fn warmup(&self) -> usize {
        self.capacity
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        self.coefficients.as_deref()
    }

    pub fn is_fitted(&self) -> bool {
        self.coefficients.is_some()
    }

    /// Fits after the initial one.
    pub fn refits(&self) -> usize {
        self.refits
    }

    pub fn push(&mut self, x: f64) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(x);
    }

    fn differenced(&self) -> Vec<f64> {
        let xs: Vec<f64> = self.window.iter().copied().collect();
        match self.season {
            Some(s) => xs.windows(s + 1).map(|w| w[s] - w[0]).collect(),
            None => xs,
        }
    }

    /// Least-squares fit of `z_t = c0 + sum_k c_k z_{t-k}` over the window.
    ///
    /// Lags are centered so the intercept is not shrunk; the normal
    /// equations get a `1e-8` ridge on the lag block, which selects the
    /// minimum-norm lag coefficients when the design is singular.
    pub fn fit(&mut self) -> Result<&[f64], ForecastError> {
        let z = self.differenced();
        let p = self.order;
        let need = p + 1;
        if z.len() < need {
            return Err(ForecastError::InsufficientWindow {
                have: z.len(),
                need,
            });
        }
        let rows = z.len() - p;
        let target: Vec<f64> = z[p..].to_vec();
        let lagged = |row: usize, k: usize| z[p + row - k];

        let y_mean = target.iter().sum::<f64>() / rows as f64;
        let x_means: Vec<f64> = (1..=p)
            .map(|k| (0..rows).map(|r| lagged(r, k)).sum::<f64>() / rows as f64)
            .collect();

        let mut coefs = vec![0.0; p + 1];
        if p > 0 {
            let design = DMatrix::from_fn(rows, p, |r, c| lagged(r, c + 1) - x_means[c]);
            let y = DVector::from_iterator(rows, target.iter().map(|v| v - y_mean));
            let mut gram = design.transpose() * &design;
            for i in 0..p {
                gram[(i, i)] += RIDGE_JITTER;
            }
            let rhs = design.transpose() * y;
            let solved = gram.cholesky().map(|c| c.solve(&rhs)).ok_or(
                ForecastError::InsufficientWindow {
                    have: z.len(),
                    need,
                },
            )?;
            coefs[1..].copy_from_slice(solved.as_slice());
        }
        coefs[0] = y_mean
            - x_means
                .iter()
                .zip(&coefs[1..])
                .map(|(m, c)| m * c)
                .sum::<f64>();
        self.coefficients = Some(coefs);
        Ok(self.coefficients.as_deref().expect("just set"))
    }

    /// One-step forecast from the current coefficients and window.
    pub fn predict(&self) -> f64 {
        let last = self.window.back().copied().unwrap_or(0.0);
        let Some(c) = &self.coefficients else {
            return last;
        };
        let n = self.window.len();
        let lag = self.season.unwrap_or(0);
        if n < lag + self.order {
            return last;
        }
        let x = |k: usize| self.window[n - k];
        let z = |k: usize| match self.season {
            Some(s) => x(k) - x(k + s),
            None => x(k),
        };
        let z_hat = c[0] + (1..=self.order).map(|k| c[k] * z(k)).sum::<f64>();
        match self.season {
            Some(s) => x(s) + z_hat,
            None => z_hat,
        }
    }

    /// Predicts the next value, then absorbs `x` and applies the retraining
    /// policy.
    pub fn step(&mut self, x: f64) -> Result<f64, ForecastError> {
        if !x.is_finite() {
            return Err(ForecastError::NonFiniteInput);
        }
        let prediction = self.predict();
        let was_fitted = self.is_fitted();
        self.push(x);
        self.seen += 1;

        if !was_fitted {
            if self.seen >= self.capacity {
                self.fit()?;
            }
            return Ok(prediction);
        }
        let refit = match self.policy {
            RetrainPolicy::None => false,
            RetrainPolicy::Scheduled { period } => (self.seen - self.capacity).is_multiple_of(period),
            RetrainPolicy::Dynamic(_) => {
                let adwin = self.adwin.as_mut().expect("dynamic policy owns an ADWIN");
                adwin
                    .update((prediction - x).abs())
                    .map_err(|_| ForecastError::NonFiniteInput)?
                    .drift
            }
        };
        if refit {
            self.fit()?;
            self.refits += 1;
        }
        Ok(prediction)
    }
}
