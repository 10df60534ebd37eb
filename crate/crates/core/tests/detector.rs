use omlad::rng::SeededRng;
use omlad::stats::StatsMode;
use omlad::{DetectorConfig, Observation, Orders, PadDetector, ThresholdRule};
use proptest::prelude::*;

fn seasonal_stream(seed: u64, n: usize, scale: f64) -> Vec<Observation> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|t| {
            let mut v = 3.0 * (t as f64 * 0.5).sin() + rng.normal();
            if rng.bernoulli(0.02) {
                v += 8.0;
            }
            Observation::new(t as i64, v * scale)
        })
        .collect()
}

fn small_config(rule: ThresholdRule, error_stats: StatsMode) -> DetectorConfig {
    DetectorConfig {
        orders: Orders::new(2, 1, 1, 1, 0, 1),
        season: 12,
        learning_rate: 0.005,
        threshold_rule: rule,
        warmup: 30,
        error_stats,
        ..DetectorConfig::default()
    }
}

fn flags(config: DetectorConfig, stream: &[Observation]) -> Vec<bool> {
    let mut det = PadDetector::new(config).unwrap();
    det.score_all(stream)
        .unwrap()
        .iter()
        .map(|p| p.is_flagged())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn flags_invariant_under_power_of_two_scaling(seed in any::<u64>(), exp in -8i32..8) {
        let config = small_config(ThresholdRule::MeanSigma { c: 3.0 }, StatsMode::Global);
        let k = 2f64.powi(exp);
        prop_assert_eq!(
            flags(config, &seasonal_stream(seed, 600, 1.0)),
            flags(config, &seasonal_stream(seed, 600, k))
        );
    }

    #[test]
    fn any_partition_scores_identically(seed in any::<u64>(), cuts in prop::collection::vec(0usize..500, 0..5)) {
        let config = small_config(ThresholdRule::GumbelQuantile { alpha: 0.05, n: None }, StatsMode::ExponentialDecay { lambda: 0.02 });
        let stream = seasonal_stream(seed, 500, 1.0);
        let mut whole = PadDetector::new(config).unwrap();
        let reference = whole.score_all(&stream).unwrap();

        let mut cuts = cuts;
        cuts.sort_unstable();
        cuts.push(stream.len());
        let mut det = PadDetector::new(config).unwrap();
        let mut got = Vec::new();
        let mut from = 0;
        for cut in cuts {
            got.extend(det.score_all(&stream[from..cut]).unwrap());
            det = PadDetector::restore(det.snapshot()).unwrap();
            det = PadDetector::from_json(&det.to_json()).unwrap();
            from = cut;
        }
        prop_assert_eq!(got.len(), reference.len());
        for (a, b) in got.iter().zip(&reference) {
            prop_assert_eq!(a.score.to_bits(), b.score.to_bits());
            prop_assert_eq!(a.prediction.to_bits(), b.prediction.to_bits());
        }
    }

    #[test]
    fn scores_are_bounded_and_consistent(seed in any::<u64>(), alpha in 0.001..0.5f64) {
        let config = small_config(ThresholdRule::GaussianQuantile { alpha }, StatsMode::ExponentialDecay { lambda: 0.01 });
        let mut det = PadDetector::new(config).unwrap();
        for p in det.score_all(&seasonal_stream(seed, 400, 1.0)).unwrap() {
            prop_assert!((0.0..=1.0).contains(&p.score));
            prop_assert_eq!(p.score == 1.0, p.error >= p.threshold);
            prop_assert!(p.threshold >= omlad::EPS_FLOOR);
        }
    }
}

#[test]
fn default_config_flags_invariant_under_general_scaling() {
    let config = DetectorConfig {
        error_stats: StatsMode::Global,
        ..DetectorConfig::default()
    };
    for seed in 0..3 {
        let base = flags(config, &seasonal_stream(seed, 1500, 1.0));
        assert_eq!(base, flags(config, &seasonal_stream(seed, 1500, 3.7)));
        assert!(base.iter().any(|&f| f));
    }
}

#[test]
fn one_record_per_post_warmup_observation() {
    let config = small_config(ThresholdRule::default(), StatsMode::Global);
    let stream = seasonal_stream(1, 200, 1.0);
    let mut det = PadDetector::new(config).unwrap();
    let points = det.score_all(&stream).unwrap();
    assert_eq!(points.len(), 200 - config.warmup);
    assert_eq!(points[0].t, config.warmup as i64);
    assert_eq!(det.points_scored(), points.len() as u64);
}

#[test]
fn spikes_score_higher_than_typical_points() {
    let mut rng = SeededRng::new(21);
    let mut det = PadDetector::new(DetectorConfig::default()).unwrap();
    let mut spike_scores = Vec::new();
    let mut other = Vec::new();
    for t in 0..3000 {
        let spike = t > 500 && t % 97 == 0;
        let v = 10.0 * (t as f64 * std::f64::consts::TAU / 52.0).sin()
            + rng.normal()
            + if spike { 10.0 } else { 0.0 };
        if let Some(p) = det.score_learn(Observation::new(t, v)).unwrap() {
            if spike {
                spike_scores.push(p.score);
            } else {
                other.push(p.score);
            }
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    assert!(mean(&spike_scores) > 0.9);
    assert!(mean(&other) < 0.5);
}
