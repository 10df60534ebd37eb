//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `erf` from its alternating Maclaurin series, summed until the terms
/// stop mattering.
pub fn erf_maclaurin(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = x; // x^(2n+1) / n!
    let mut n = 0u32;
    loop {
        let term = power / f64::from(2 * n + 1);
        let signed = if n.is_multiple_of(2) { term } else { -term };
        sum += signed;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && f64::from(n) > x * x {
            break;
        }
        n += 1;
        power *= x * x / f64::from(n);
        if n > 400 {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

/// `q` with `P(|Z| > q) = alpha` for standard normal `Z`, by bisection on
/// `erf(q / sqrt 2) = 1 - alpha`.
pub fn half_normal_quantile_bisect(alpha: f64) -> f64 {
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0f64, 8.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erf_maclaurin(mid / 2f64.sqrt()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Best F1 over every score plus 0 and a threshold above all scores.
pub fn f1_brute(scores: &[f64], labels: &[bool]) -> f64 {
    let max = scores.iter().cloned().fold(0.0, f64::max);
    scores
        .iter()
        .copied()
        .chain([0.0, max + 1e-9 + 1.0])
        .map(|t| f1_at(scores, labels, t))
        .fold(0.0, f64::max)
}

/// Smallest score threshold reaching `best` (within `tol`).
pub fn f1_brute_threshold(scores: &[f64], labels: &[bool], best: f64, tol: f64) -> f64 {
    scores
        .iter()
        .copied()
        .filter(|&t| (f1_at(scores, labels, t) - best).abs() <= tol)
        .fold(f64::INFINITY, f64::min)
}

/// Pairwise Mann-Whitney count.
pub fn auc_brute(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
