//! Thresholds `tau` for the anomaly score `min(error / tau, 1)`.
//!
//! Three rules are provided:
//!
//! * `tau0 = mu + c * sigma`, a plain sensitivity constant on the running
//!   error statistics;
//! * `tau1 = q_{1-alpha} * sigma_hat`, where `q` is the quantile of the
//!   half-normal distribution `|N(0, 1)|`, giving a per-point false-positive
//!   probability `alpha` under Gaussian residuals;
//! * `tau2 = (q'_{1-alpha} + b_n) * sigma_hat / a_n` with `q'` the standard
//!   Gumbel quantile and `a_n, b_n` the normalizing constants of the maximum
//!   of `n` half-normal variables, bounding (asymptotically) the probability
//!   of any false positive among `n` residuals.
//!
//! Every threshold is floored at [`EPS_FLOOR`].

use std::f64::consts::{PI, SQRT_2};

use thiserror::Error;

use crate::stats::RunningStats;
use crate::{ThresholdRule, EPS_FLOOR};

/// Largest `n` used by the Gumbel rule when it follows the stream length.
pub const GUMBEL_N_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ThresholdError {
    #[error("alpha = {0} must lie in (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("n = {0} is too small, the Gumbel rule needs n >= 2")]
    NTooSmall(u64),
}

fn check_alpha(alpha: f64) -> Result<(), ThresholdError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ThresholdError::AlphaOutOfRange(alpha))
    }
}

pub fn tau_mean_sigma(mu: f64, sigma: f64, c: f64) -> f64 {
    (mu + c * sigma).max(EPS_FLOOR)
}

/// `q` with `P(|Z| <= q) = 1 - alpha`, i.e. `Phi^-1(1 - alpha/2)`.
pub fn half_normal_quantile(alpha: f64) -> Result<f64, ThresholdError> {
    check_alpha(alpha)?;
    let tail = 0.5 * alpha;
    // Acklam's rational approximation, evaluated in the lower tail for
    // accuracy, then one Newton step on the upper-tail probability.
    let z = -acklam_lower(tail);
    let upper = 0.5 * erfc(z / SQRT_2);
    let density = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    Ok(z + (upper - tail) / density)
}

pub fn tau_gaussian(alpha: f64, sigma_hat: f64) -> Result<f64, ThresholdError> {
    Ok((half_normal_quantile(alpha)? * sigma_hat).max(EPS_FLOOR))
}

/// `-ln(-ln(1 - alpha))`, the `(1 - alpha)` quantile of the standard Gumbel
/// law.
pub fn gumbel_quantile(alpha: f64) -> Result<f64, ThresholdError> {
    check_alpha(alpha)?;
    Ok(-(-(-alpha).ln_1p()).ln())
}

/// Normalizing constants for the maximum of `n` half-normal variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelConstants {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
}

impl GumbelConstants {
    /// `a_n = sqrt(2 ln 2n)`, `b_n = a_n^2 - ln(4 pi ln 2n) / 2`.
    pub fn new(n: u64) -> Self {
        let n = n.max(1);
        let log_2n = (2.0 * n as f64).ln();
        let a_n = (2.0 * log_2n).sqrt();
        let b_n = a_n * a_n - 0.5 * (4.0 * PI * log_2n).ln();
        Self { n, a_n, b_n }
    }
}

pub fn tau_gumbel(alpha: f64, sigma_hat: f64, n: u64) -> Result<f64, ThresholdError> {
    let q = gumbel_quantile(alpha)?;
    if n < 2 {
        return Err(ThresholdError::NTooSmall(n));
    }
    Ok(gumbel_tau_from_parts(q, sigma_hat, n))
}

fn gumbel_tau_from_parts(q: f64, sigma_hat: f64, n: u64) -> f64 {
    let g = GumbelConstants::new(n);
    ((q + g.b_n) * sigma_hat / g.a_n).max(EPS_FLOOR)
}

/// A validated [`ThresholdRule`] with its quantile precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholder {
    rule: ThresholdRule,
    quantile: f64,
}

impl Thresholder {
    pub fn new(rule: ThresholdRule) -> Result<Self, ThresholdError> {
        let quantile = match rule {
            ThresholdRule::MeanSigma { .. } => 0.0,
            ThresholdRule::GaussianQuantile { alpha } => half_normal_quantile(alpha)?,
            ThresholdRule::GumbelQuantile { alpha, n } => {
                if let Some(n) = n.filter(|&n| n < 2) {
                    return Err(ThresholdError::NTooSmall(n));
                }
                gumbel_quantile(alpha)?
            }
        };
        Ok(Self { rule, quantile })
    }

    pub fn rule(&self) -> ThresholdRule {
        self.rule
    }

    /// Threshold from running error statistics after `scored` emitted points.
    ///
    /// The quantile rules treat residuals as zero-mean, so their scale is
    /// the root of the raw second moment.
    pub fn threshold(&self, stats: &RunningStats, scored: u64) -> f64 {
        match self.rule {
            ThresholdRule::MeanSigma { c } => tau_mean_sigma(stats.mean(), stats.std(), c),
            ThresholdRule::GaussianQuantile { .. } => {
                (self.quantile * stats.zero_mean_std()).max(EPS_FLOOR)
            }
            ThresholdRule::GumbelQuantile { n, .. } => {
                let n = n.unwrap_or_else(|| scored.clamp(2, GUMBEL_N_CAP));
                gumbel_tau_from_parts(self.quantile, stats.zero_mean_std(), n)
            }
        }
    }
}

// Coefficients of Acklam's inverse normal CDF approximation.
const A: [f64; 6] = [
    -3.969683028665376e1,
    2.209460984245205e2,
    -2.759285104469687e2,
    1.38357751867269e2,
    -3.066479806614716e1,
    2.506628277459239e0,
];
const B: [f64; 5] = [
    -5.447609879822406e1,
    1.615858368580409e2,
    -1.556989798598866e2,
    6.680131188771972e1,
    -1.328068155288572e1,
];
const C: [f64; 6] = [
    -7.784894002430293e-3,
    -3.223964580411365e-1,
    -2.400758277161838e0,
    -2.549732539343734e0,
    4.374664141464968e0,
    2.938163982698783e0,
];
const D: [f64; 4] = [
    7.784695709041462e-3,
    3.224671290700398e-1,
    2.445134137142996e0,
    3.754408661907416e0,
];

/// `Phi^-1(p)` for `0 < p <= 1/2`, relative error about `1.15e-9`.
fn acklam_lower(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Complementary error function.
///
/// Below 1.5 it is `1 - erf(x)` with erf from the positive-term series
/// `2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!`; above, a continued
/// fraction evaluated by the modified Lentz method.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 1.5 {
        return 1.0 - erf_series(x);
    }
    erfc_continued_fraction(x)
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term > sum * 1e-17 {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / PI.sqrt() / f
}
