use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Linear seasonal ARMA regression on an already differenced series,
/// trained one observation at a time by gradient descent on the squared
/// one-step error.
///
/// Weight layout: `p` AR lags, `q` MA (residual) lags, `P` seasonal AR lags at
/// `s, 2s, ..`, `Q` seasonal MA lags, then the intercept. Lags that have not
/// been observed yet contribute zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnarimaxModel {
    p: usize,
    q: usize,
    sp: usize,
    sq: usize,
    season: usize,
    learning_rate: f64,
    weights: Vec<f64>,
    /// Past targets, most recent first.
    y_buffer: VecDeque<f64>,
    /// Past residuals, most recent first.
    e_buffer: VecDeque<f64>,
    #[serde(skip)]
    scratch: Vec<f64>,
}

impl SnarimaxModel {
    pub fn new(
        p: usize,
        q: usize,
        sp: usize,
        sq: usize,
        season: usize,
        learning_rate: f64,
    ) -> Self {
        let season = season.max(1);
        let n = p + q + sp + sq + 1;
        Self {
            p,
            q,
            sp,
            sq,
            season,
            learning_rate,
            weights: vec![0.0; n],
            y_buffer: VecDeque::with_capacity(p.max(sp * season) + 1),
            e_buffer: VecDeque::with_capacity(q.max(sq * season) + 1),
            scratch: vec![0.0; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Replaces the weight vector (intercept last).
    ///
    /// # Panics
    /// If the length does not match `p + q + P + Q + 1`.
    pub fn set_weights(&mut self, weights: &[f64]) {
        assert_eq!(weights.len(), self.weights.len(), "weight vector length");
        self.weights.copy_from_slice(weights);
    }

    pub fn intercept(&self) -> f64 {
        self.weights[self.weights.len() - 1]
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn y_capacity(&self) -> usize {
        self.p.max(self.sp * self.season)
    }

    pub fn e_capacity(&self) -> usize {
        self.q.max(self.sq * self.season)
    }

    pub fn buffer_lens(&self) -> (usize, usize) {
        (self.y_buffer.len(), self.e_buffer.len())
    }

    /// Seeds the lag buffers, most recent value first.
    pub fn set_history(&mut self, ys: &[f64], es: &[f64]) {
        self.y_buffer = ys.iter().copied().take(self.y_capacity()).collect();
        self.e_buffer = es.iter().copied().take(self.e_capacity()).collect();
    }

    /// Visits `(index, value)` for every feature, the constant 1 last.
    fn for_each_feature(&self, mut visit: impl FnMut(usize, f64)) {
        let lag = |buf: &VecDeque<f64>, k: usize| buf.get(k - 1).copied().unwrap_or(0.0);
        let mut i = 0;
        let mut emit = |v: f64| {
            visit(i, v);
            i += 1;
        };
        for k in 1..=self.p {
            emit(lag(&self.y_buffer, k));
        }
        for k in 1..=self.q {
            emit(lag(&self.e_buffer, k));
        }
        for k in 1..=self.sp {
            emit(lag(&self.y_buffer, k * self.season));
        }
        for k in 1..=self.sq {
            emit(lag(&self.e_buffer, k * self.season));
        }
        emit(1.0);
    }

    /// Writes the feature vector (including the constant 1) into `out`.
    pub fn features_into(&self, out: &mut [f64]) {
        self.for_each_feature(|i, v| out[i] = v);
    }

    pub fn features(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.weights.len()];
        self.features_into(&mut out);
        out
    }

    pub fn predict(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_feature(|i, v| acc += self.weights[i] * v);
        acc
    }

    /// Gradient of `(y - y_hat)^2` with respect to the weights:
    /// `-2 (y - y_hat) * features`.
    pub fn gradient(&self, y: f64) -> Vec<f64> {
        let e = y - self.predict();
        self.features().iter().map(|fi| -2.0 * e * fi).collect()
    }

    /// One online gradient step on target `y`; returns the residual
    /// `y - y_hat` computed before the update.
    ///
    /// When the step would make any weight non-finite it is skipped, the
    /// buffers still advance, and `NonFiniteUpdate` is returned.
    pub fn learn(&mut self, y: f64) -> Result<f64, ForecastError> {
        self.step(y, true)
    }

    /// Advances the lag buffers with `y` without touching the weights.
    pub fn observe(&mut self, y: f64) -> Result<f64, ForecastError> {
        self.step(y, false)
    }

    fn step(&mut self, y: f64, update: bool) -> Result<f64, ForecastError> {
        if !y.is_finite() {
            return Err(ForecastError::NonFiniteInput);
        }
        let e = y - self.predict();
        let mut f = std::mem::take(&mut self.scratch);
        f.resize(self.weights.len(), 0.0);
        self.features_into(&mut f);

        let mut outcome = Ok(e);
        if !e.is_finite() {
            outcome = Err(ForecastError::NonFiniteUpdate);
        } else if update {
            let step = 2.0 * self.learning_rate * e;
            let finite = self
                .weights
                .iter()
                .zip(&f)
                .all(|(w, fi)| (w + step * fi).is_finite());
            if finite {
                for (w, fi) in self.weights.iter_mut().zip(&f) {
                    *w += step * fi;
                }
            } else {
                outcome = Err(ForecastError::NonFiniteUpdate);
            }
        }
        self.scratch = f;

        push_capped(&mut self.y_buffer, y, self.p.max(self.sp * self.season));
        let e_cap = self.q.max(self.sq * self.season);
        push_capped(
            &mut self.e_buffer,
            if e.is_finite() { e } else { 0.0 },
            e_cap,
        );
        outcome
    }
}

fn push_capped(buf: &mut VecDeque<f64>, x: f64, cap: usize) {
    if cap == 0 {
        return;
    }
    if buf.len() == cap {
        buf.pop_back();
    }
    buf.push_front(x);
}
