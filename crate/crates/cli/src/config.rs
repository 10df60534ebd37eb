//! Flag and config-file merging. Precedence: flags, then the file, then
//! built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use omlad::eval::{BaselineSettings, ContenderKind};
use omlad::stats::StatsMode;
use omlad::{DetectorConfig, Orders, ThresholdRule};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    MeanSigma,
    Gaussian,
    Gumbel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorStatsKind {
    Global,
    Decay,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with the same keys as the flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the resolved configuration to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DetectorArgs {
    /// Non-seasonal AR order.
    #[arg(long = "p")]
    pub p: Option<i64>,
    /// Non-seasonal differencing order.
    #[arg(long = "d")]
    pub d: Option<i64>,
    /// Non-seasonal MA order.
    #[arg(long = "q")]
    pub q: Option<i64>,
    /// Seasonal AR order.
    #[arg(long = "P")]
    pub sp: Option<i64>,
    /// Seasonal differencing order.
    #[arg(long = "D")]
    pub sd: Option<i64>,
    /// Seasonal MA order.
    #[arg(long = "Q")]
    pub sq: Option<i64>,
    /// Season length.
    #[arg(long = "s")]
    pub s: Option<usize>,
    /// Learning rate of the online forecaster.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleKind>,
    /// Multiplier for the mean-sigma rule.
    #[arg(long)]
    pub c: Option<f64>,
    /// False-positive level for the gaussian and gumbel rules.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Sample size for the gumbel rule (default: points scored so far).
    #[arg(long = "gumbel-n")]
    pub gumbel_n: Option<u64>,
    /// Points consumed before scores are emitted.
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long = "learn-on-anomaly")]
    pub learn_on_anomaly: Option<bool>,
    #[arg(long = "error-stats", value_enum)]
    pub error_stats: Option<ErrorStatsKind>,
    /// Decay rate of the residual statistics.
    #[arg(long)]
    pub decay: Option<f64>,
}

impl DetectorArgs {
    pub fn any_set(&self) -> bool {
        self.p.is_some()
            || self.d.is_some()
            || self.q.is_some()
            || self.sp.is_some()
            || self.sd.is_some()
            || self.sq.is_some()
            || self.s.is_some()
            || self.lr.is_some()
            || self.rule.is_some()
            || self.c.is_some()
            || self.alpha.is_some()
            || self.gumbel_n.is_some()
            || self.warmup.is_some()
            || self.learn_on_anomaly.is_some()
            || self.error_stats.is_some()
            || self.decay.is_some()
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<i64>,
    pub d: Option<i64>,
    pub q: Option<i64>,
    #[serde(rename = "P")]
    pub sp: Option<i64>,
    #[serde(rename = "D")]
    pub sd: Option<i64>,
    #[serde(rename = "Q")]
    pub sq: Option<i64>,
    pub s: Option<usize>,
    pub lr: Option<f64>,
    pub rule: Option<RuleKind>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub gumbel_n: Option<u64>,
    pub warmup: Option<usize>,
    pub learn_on_anomaly: Option<bool>,
    pub error_stats: Option<ErrorStatsKind>,
    pub decay: Option<f64>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub contenders: Option<Vec<String>>,
    pub baseline_window: Option<usize>,
    pub schedule_period: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Resolves the detector configuration from flags, file and defaults.
pub fn resolve_detector(
    args: &DetectorArgs,
    file: &FileConfig,
) -> Result<DetectorConfig, CliError> {
    let defaults = DetectorConfig::default();
    let d = defaults.orders;
    let order = |flag: Option<i64>, from_file: Option<i64>, default: usize| {
        flag.or(from_file).unwrap_or(default as i64)
    };
    let orders = Orders::from_signed([
        order(args.p, file.p, d.p),
        order(args.d, file.d, d.d),
        order(args.q, file.q, d.q),
        order(args.sp, file.sp, d.sp),
        order(args.sd, file.sd, d.sd),
        order(args.sq, file.sq, d.sq),
    ])?;
    let season = args.s.or(file.s).unwrap_or(defaults.season);
    let rule = match args.rule.or(file.rule).unwrap_or(RuleKind::MeanSigma) {
        RuleKind::MeanSigma => ThresholdRule::MeanSigma {
            c: args.c.or(file.c).unwrap_or(3.0),
        },
        RuleKind::Gaussian => ThresholdRule::GaussianQuantile {
            alpha: args.alpha.or(file.alpha).unwrap_or(0.05),
        },
        RuleKind::Gumbel => ThresholdRule::GumbelQuantile {
            alpha: args.alpha.or(file.alpha).unwrap_or(0.05),
            n: args.gumbel_n.or(file.gumbel_n),
        },
    };
    let error_stats = match args.error_stats.or(file.error_stats) {
        Some(ErrorStatsKind::Global) => StatsMode::Global,
        Some(ErrorStatsKind::Decay) | None => StatsMode::ExponentialDecay {
            lambda: args
                .decay
                .or(file.decay)
                .or(defaults.error_stats.lambda())
                .unwrap_or(0.01),
        },
    };
    let mut config = DetectorConfig {
        orders,
        season,
        learning_rate: args.lr.or(file.lr).unwrap_or(defaults.learning_rate),
        threshold_rule: rule,
        warmup: 0,
        learn_on_anomaly: args
            .learn_on_anomaly
            .or(file.learn_on_anomaly)
            .unwrap_or(defaults.learn_on_anomaly),
        error_stats,
    };
    config.warmup = args
        .warmup
        .or(file.warmup)
        .unwrap_or_else(|| config.recommended_warmup());
    config.validate()?;
    Ok(config)
}

pub fn resolve_seed(common: &CommonArgs, file: &FileConfig) -> u64 {
    common.seed.or(file.seed).unwrap_or(0)
}

pub fn resolve_contenders(
    flag: &[String],
    file: &FileConfig,
) -> Result<Vec<ContenderKind>, CliError> {
    let names: Vec<String> = if !flag.is_empty() {
        flag.to_vec()
    } else if let Some(list) = &file.contenders {
        list.clone()
    } else {
        return Ok(ContenderKind::ALL.to_vec());
    };
    if names.is_empty() {
        return Err(CliError::Config("empty contender list".into()));
    }
    names
        .iter()
        .map(|n| {
            n.trim()
                .parse()
                .map_err(|e: omlad::eval::EvalError| CliError::Config(e.to_string()))
        })
        .collect()
}

pub fn resolve_baseline(
    window: Option<usize>,
    period: Option<usize>,
    file: &FileConfig,
) -> Result<BaselineSettings, CliError> {
    let defaults = BaselineSettings::default();
    let settings = BaselineSettings {
        window: window.or(file.baseline_window).unwrap_or(defaults.window),
        schedule_period: period
            .or(file.schedule_period)
            .unwrap_or(defaults.schedule_period),
        ..defaults
    };
    if settings.schedule_period == 0 {
        return Err(CliError::Config("schedule period must be >= 1".into()));
    }
    Ok(settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library() {
        let cfg = resolve_detector(&DetectorArgs::default(), &FileConfig::default()).unwrap();
        assert_eq!(cfg, DetectorConfig::default());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig =
            toml::from_str("p = 1\nlr = 0.5\nrule = \"gaussian\"\nalpha = 0.1\nP = 0\nQ = 0\n")
                .unwrap();
        let args = DetectorArgs {
            lr: Some(0.01),
            ..DetectorArgs::default()
        };
        let cfg = resolve_detector(&args, &file).unwrap();
        assert_eq!(cfg.orders.p, 1);
        assert_eq!(cfg.learning_rate, 0.01);
        assert_eq!(
            cfg.threshold_rule,
            ThresholdRule::GaussianQuantile { alpha: 0.1 }
        );
        assert_eq!(cfg.warmup, cfg.recommended_warmup());
    }

    #[test]
    fn rejects_bad_values() {
        let args = DetectorArgs {
            p: Some(-1),
            ..DetectorArgs::default()
        };
        assert!(matches!(
            resolve_detector(&args, &FileConfig::default()),
            Err(CliError::Config(_))
        ));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
