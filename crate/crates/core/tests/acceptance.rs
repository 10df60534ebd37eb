//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use omlad::dataio::{generate_synthetic, SynthSpec};
use omlad::drift::Adwin;
use omlad::eval::{auc_roc, f1_sweep, run_benchmark, BenchmarkOptions, ContenderKind};
use omlad::forecast::SnarimaxModel;
use omlad::rng::SeededRng;
use omlad::thresholds::{half_normal_quantile, tau_gaussian, tau_gumbel, tau_mean_sigma};
use omlad::{DetectorConfig, Observation, Orders, PadDetector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() <= limit_s
}

fn drift_robustness() -> Outcome {
    let start = Instant::now();
    let options = BenchmarkOptions {
        repeats: 1,
        ..BenchmarkOptions::default()
    };
    let kinds = [ContenderKind::OmlAd, ContenderKind::BaselineNone];
    let (mut mse_wins, mut f1_wins) = (0, 0);
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let series = generate_synthetic(&SynthSpec::drift_fixture(seed)).expect("valid fixture");
        let report = run_benchmark(&series, &kinds, &options).expect("benchmark runs");
        let oml = report.get(ContenderKind::OmlAd).expect("row");
        let none = report.get(ContenderKind::BaselineNone).expect("row");
        if oml.mse <= none.mse / 3.0 {
            mse_wins += 1;
        }
        if oml.f1 >= none.f1 {
            f1_wins += 1;
        }
        ratios.push(none.mse / oml.mse);
    }
    let elapsed = start.elapsed();
    ratios.sort_by(f64::total_cmp);
    outcome(
        mse_wins >= 18 && f1_wins >= 18 && within(elapsed, 60.0),
        format!(
            "MSE <= 1/3 baseline on {mse_wins}/20 (need 18; ratio min {:.2} median {:.2} max {:.2}), \
             F1 >= baseline on {f1_wins}/20 (need 18), {:.2}s",
            ratios[0],
            ratios[10],
            ratios[19],
            elapsed.as_secs_f64()
        ),
    )
}

fn threshold_calibration() -> Outcome {
    let start = Instant::now();
    let n = 1_000_000;
    let tau1 = tau_gaussian(0.05, 1.0).expect("valid alpha");
    let tau0 = tau_mean_sigma(0.0, 1.0, 3.0);
    let mut rng = SeededRng::new(2024);
    let (mut over1, mut over0) = (0u64, 0u64);
    for _ in 0..n {
        let e = rng.normal().abs();
        over1 += u64::from(e >= tau1);
        over0 += u64::from(e >= tau0);
    }
    let r1 = over1 as f64 / n as f64;
    let r0 = over0 as f64 / n as f64;
    let elapsed = start.elapsed();
    outcome(
        (0.045..=0.055).contains(&r1) && (0.0007..=0.0047).contains(&r0) && within(elapsed, 10.0),
        format!(
            "half-normal rule rate {r1:.5} in [0.045, 0.055], 3-sigma rate {r0:.5} in [0.0007, 0.0047], {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn evt_bound() -> Outcome {
    let start = Instant::now();
    let (trials, n) = (10_000, 1000);
    let tau = tau_gumbel(0.05, 1.0, n as u64).expect("valid parameters");
    let mut rng = SeededRng::new(77);
    let mut exceed = 0;
    for _ in 0..trials {
        let max = (0..n).map(|_| rng.normal().abs()).fold(0.0, f64::max);
        if max > tau {
            exceed += 1;
        }
    }
    let rate = f64::from(exceed) / f64::from(trials);
    let elapsed = start.elapsed();
    outcome(
        rate <= 0.08 && within(elapsed, 30.0),
        format!(
            "tau = {tau:.5}, exceedance {rate:.4} <= 0.08 over {trials} maxima of {n}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn quantile_accuracy() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let alpha = 0.001 + (0.999 - 0.001) * (f64::from(i) + 0.5) / 100.0;
        let q = half_normal_quantile(alpha).expect("alpha in range");
        let oracle = common::half_normal_quantile_bisect(alpha);
        worst = worst.max((q - oracle).abs());
    }
    outcome(
        worst <= 1e-8,
        format!("max |q - oracle| = {worst:.2e} <= 1e-8 over 100 alphas"),
    )
}

fn gradient_correctness() -> Outcome {
    let mut rng = SeededRng::new(5);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let season = 2 + rng.below(6) as usize;
        let mut model = SnarimaxModel::new(
            1 + rng.below(3) as usize,
            rng.below(3) as usize,
            rng.below(2) as usize,
            rng.below(2) as usize,
            season,
            0.01,
        );
        let ys: Vec<f64> = (0..model.y_capacity())
            .map(|_| rng.normal() * 2.0)
            .collect();
        let es: Vec<f64> = (0..model.e_capacity()).map(|_| rng.normal()).collect();
        model.set_history(&ys, &es);
        let weights: Vec<f64> = (0..model.weights().len()).map(|_| rng.normal()).collect();
        model.set_weights(&weights);
        let target = rng.normal() * 3.0;
        let analytic = model.gradient(target);
        for i in 0..weights.len() {
            let mut probe = model.clone();
            let mut w = weights.clone();
            w[i] += h;
            probe.set_weights(&w);
            let up = (target - probe.predict()).powi(2);
            w[i] -= 2.0 * h;
            probe.set_weights(&w);
            let down = (target - probe.predict()).powi(2);
            let numeric = (up - down) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((analytic[i] - numeric).abs() / scale);
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max relative deviation {worst:.2e} <= 1e-4 over 1000 cases"),
    )
}

fn ar_recovery() -> Outcome {
    // the model sees the standardized stream, as inside the detector
    let config = DetectorConfig {
        orders: Orders::new(1, 0, 0, 0, 0, 0),
        season: 1,
        learning_rate: 0.01,
        warmup: 1,
        ..DetectorConfig::default()
    };
    let mut total_dev = 0.0;
    let mut total_w = 0.0;
    for seed in 0..20 {
        let mut rng = SeededRng::new(1000 + seed);
        let mut det = PadDetector::new(config).expect("valid config");
        let mut x = 0.0;
        for t in 0..10_000 {
            x = 0.8 * x + rng.normal();
            det.score_learn(Observation::new(t, x))
                .expect("finite input");
        }
        let w = det.model().weights()[0];
        total_w += w;
        total_dev += (w - 0.8).abs();
    }
    let mean_dev = total_dev / 20.0;
    outcome(
        mean_dev < 0.1,
        format!(
            "mean |w1 - 0.8| = {mean_dev:.4} < 0.1 (mean w1 = {:.4}) over 20 seeds",
            total_w / 20.0
        ),
    )
}

fn metric_oracles() -> Outcome {
    let mut rng = SeededRng::new(31);
    let mut worst_f1: f64 = 0.0;
    let mut worst_auc: f64 = 0.0;
    let draw = |rng: &mut SeededRng, n: usize| {
        // coarse grids produce ties
        let levels = [0u64, 5, 20, 1000][rng.below(4) as usize];
        let scores: Vec<f64> = (0..n)
            .map(|_| match levels {
                0 => rng.uniform(),
                l => rng.below(l + 1) as f64 / l as f64,
            })
            .collect();
        let p = 0.05 + 0.9 * rng.uniform();
        let labels: Vec<bool> = (0..n).map(|_| rng.bernoulli(p)).collect();
        (scores, labels)
    };
    let mut f1_cases = 0;
    while f1_cases < 200 {
        let n = 1 + rng.below(200) as usize;
        let (scores, labels) = draw(&mut rng, n);
        if !labels.contains(&true) {
            continue;
        }
        let (f1, threshold) = f1_sweep(&scores, &labels).expect("positives present");
        let best = common::f1_brute(&scores, &labels);
        worst_f1 = worst_f1.max((f1 - best).abs());
        let t = common::f1_brute_threshold(&scores, &labels, best, 1e-12);
        if t != threshold {
            worst_f1 = f64::INFINITY;
        }
        f1_cases += 1;
    }
    let mut auc_cases = 0;
    while auc_cases < 200 {
        let n = 2 + rng.below(499) as usize;
        let (scores, labels) = draw(&mut rng, n);
        if !labels.contains(&true) || !labels.contains(&false) {
            continue;
        }
        let auc = auc_roc(&scores, &labels).expect("both classes");
        worst_auc = worst_auc.max((auc - common::auc_brute(&scores, &labels)).abs());
        auc_cases += 1;
    }
    outcome(
        worst_f1 <= 1e-12 && worst_auc <= 1e-12,
        format!("max F1 deviation {worst_f1:.2e}, max AUC deviation {worst_auc:.2e} (<= 1e-12, 200 cases each)"),
    )
}

fn adwin_behavior() -> Outcome {
    let mut detected = 0;
    for seed in 0..100 {
        let mut rng = SeededRng::new(seed);
        let mut adwin = Adwin::default();
        for _ in 0..1000 {
            adwin
                .update(f64::from(u8::from(rng.bernoulli(0.2))))
                .expect("finite");
        }
        for _ in 0..300 {
            if adwin
                .update(f64::from(u8::from(rng.bernoulli(0.8))))
                .expect("finite")
                .drift
            {
                detected += 1;
                break;
            }
        }
    }
    let mut false_alarms = 0;
    for seed in 0..20 {
        let mut rng = SeededRng::new(500 + seed);
        let mut adwin = Adwin::with_delta(0.001).expect("valid delta");
        for _ in 0..100_000 {
            adwin.update(rng.normal()).expect("finite");
        }
        false_alarms += adwin.detections();
    }
    outcome(
        detected >= 95 && false_alarms <= 5,
        format!("step detected within 300 on {detected}/100 (need 95), {false_alarms} false alarms over 20 stationary streams (max 5)"),
    )
}

fn determinism() -> Outcome {
    let series = generate_synthetic(&SynthSpec::drift_fixture(7)).expect("valid fixture");
    let options = BenchmarkOptions {
        repeats: 1,
        ..BenchmarkOptions::default()
    };
    let a = run_benchmark(&series, &ContenderKind::ALL, &options).expect("benchmark runs");
    let b = run_benchmark(&series, &ContenderKind::ALL, &options).expect("benchmark runs");
    let json_same = a.to_json() == b.to_json();

    let config = DetectorConfig::default();
    let observations: Vec<Observation> = series.observations.clone();
    let mut whole = PadDetector::new(config).expect("valid config");
    let reference = whole.score_all(&observations).expect("valid stream");
    let mut rng = SeededRng::new(99);
    let mut partitions_same = true;
    for _ in 0..10 {
        let mut cuts: Vec<usize> = (0..3)
            .map(|_| rng.below(observations.len() as u64) as usize)
            .collect();
        cuts.sort_unstable();
        cuts.push(observations.len());
        let mut det = PadDetector::new(config).expect("valid config");
        let mut points = Vec::new();
        let mut from = 0;
        for cut in cuts {
            points.extend(
                det.score_all(&observations[from..cut])
                    .expect("valid stream"),
            );
            det = PadDetector::from_json(&det.to_json()).expect("round trip");
            from = cut;
        }
        let same = points.len() == reference.len()
            && points.iter().zip(&reference).all(|(p, r)| {
                p.t == r.t
                    && p.score.to_bits() == r.score.to_bits()
                    && p.prediction.to_bits() == r.prediction.to_bits()
                    && p.threshold.to_bits() == r.threshold.to_bits()
            });
        partitions_same &= same;
    }
    outcome(
        json_same && partitions_same,
        format!("benchmark JSON identical: {json_same}, 10 snapshot partitions bit-identical: {partitions_same}"),
    )
}

fn throughput() -> Outcome {
    let n = 200_000;
    let series = generate_synthetic(&SynthSpec {
        n,
        ..SynthSpec::drift_fixture(11)
    })
    .expect("valid spec");
    let options = BenchmarkOptions {
        repeats: 3,
        parallel: false,
        ..BenchmarkOptions::default()
    };
    let report = run_benchmark(&series, &[ContenderKind::OmlAd], &options).expect("benchmark runs");
    let ms = report.get(ContenderKind::OmlAd).expect("row").mean_time_ms;
    let rate = n as f64 / (ms / 1e3);
    outcome(
        rate >= 100_000.0,
        format!("{rate:.0} observations/s (>= 100000) on the default configuration, {n} points"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("drift robustness", drift_robustness),
        ("threshold calibration", threshold_calibration),
        ("extreme-value bound", evt_bound),
        ("quantile accuracy", quantile_accuracy),
        ("gradient correctness", gradient_correctness),
        ("AR recovery", ar_recovery),
        ("metric oracles", metric_oracles),
        ("ADWIN behavior", adwin_behavior),
        ("determinism", determinism),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("[{status}] {:>2}. {name}: {}", i + 1, result.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
