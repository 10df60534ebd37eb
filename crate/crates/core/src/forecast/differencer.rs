use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Applies `(1 - B)^d (1 - B^s)^D` to a stream and inverts forecasts back to
/// the original scale.
///
/// The operator is expanded into integer lag coefficients once, so both
/// directions are a single dot product against the raw history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Differencer {
    d: usize,
    seasonal_d: usize,
    season: usize,
    /// `coefs[k]` multiplies `x_{t-k}`; `coefs[0] == 1`.
    coefs: Vec<f64>,
    /// Most recent raw value first.
    history: VecDeque<f64>,
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Differencer {
    pub fn new(d: usize, seasonal_d: usize, season: usize) -> Self {
        let season = season.max(1);
        let mut coefs = vec![1.0];
        for _ in 0..d {
            coefs = poly_mul(&coefs, &[1.0, -1.0]);
        }
        let mut seasonal = vec![0.0; season + 1];
        seasonal[0] = 1.0;
        seasonal[season] = -1.0;
        for _ in 0..seasonal_d {
            coefs = poly_mul(&coefs, &seasonal);
        }
        let order = coefs.len() - 1;
        Self {
            d,
            seasonal_d,
            season,
            coefs,
            history: VecDeque::with_capacity(order + 1),
        }
    }

    /// Number of raw values needed before differencing is defined.
    pub fn order(&self) -> usize {
        self.coefs.len() - 1
    }

    pub fn is_ready(&self) -> bool {
        self.history.len() == self.order()
    }

    pub fn orders(&self) -> (usize, usize, usize) {
        (self.d, self.seasonal_d, self.season)
    }

    /// Differences `x` against the stored history, then records `x`.
    ///
    /// Returns `None` while the history is still filling.
    pub fn apply(&mut self, x: f64) -> Result<Option<f64>, ForecastError> {
        if !x.is_finite() {
            return Err(ForecastError::NonFiniteInput);
        }
        let out = if self.is_ready() {
            let mut acc = x;
            for (c, h) in self.coefs[1..].iter().zip(&self.history) {
                acc += c * h;
            }
            Some(acc)
        } else {
            None
        };
        self.push(x);
        Ok(out)
    }

    /// Maps a forecast of the differenced series to the original scale.
    pub fn invert(&self, y_hat: f64) -> Result<f64, ForecastError> {
        if !self.is_ready() {
            return Err(ForecastError::NotWarm);
        }
        let mut acc = y_hat;
        for (c, h) in self.coefs[1..].iter().zip(&self.history) {
            acc -= c * h;
        }
        Ok(acc)
    }

    fn push(&mut self, x: f64) {
        let order = self.order();
        if order == 0 {
            return;
        }
        if self.history.len() == order {
            self.history.pop_back();
        }
        self.history.push_front(x);
    }
}
