//! Experiment configuration: presets, a flat JSON file, and flag overrides,
//! merged in that order.

use std::path::{Path, PathBuf};

use dyngt_core::bounds::{BoundParams, LogBase, HEURISTIC_MULTIPLIER};
use dyngt_core::decoders::DEFAULT_ENUMERATION_CAP;
use dyngt_core::designs::CcaRule;
use dyngt_core::model::{ModelError, DEFAULT_RECOVERY};
use dyngt_core::pipeline::{DecoderKind, Experiment, Policy, SearchGranularity, Strategy};
use dyngt_core::ModelParams;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Syntax(serde_json::Error),
    #[error("config must be a JSON object")]
    NotAnObject,
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("`{key}` = {value} is out of range: {expected}")]
    OutOfRange {
        key: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("unknown preset `{0}` (expected fig1, fig4a, fig4b, fig6a, fig6b or fig7)")]
    UnknownPreset(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    MinTestsSearch,
    FixedBudget,
    /// Mean infected curves of the discrete model and its continuous-time
    /// counterpart, without testing.
    ContinuousComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub population: usize,
    pub community_size: usize,
    pub p_init: f64,
    pub q1: f64,
    pub q2: f64,
    #[serde(default = "default_recovery")]
    pub recovery: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend on it.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub cca_rule: CcaRule,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_multiplier")]
    pub heuristic_multiplier: f64,
    #[serde(default = "default_start_tests")]
    pub start_tests: usize,
    #[serde(default = "default_coarse_divisor")]
    pub coarse_divisor: usize,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
}

fn default_recovery() -> f64 {
    DEFAULT_RECOVERY
}
fn default_strategies() -> Vec<Strategy> {
    vec![
        Strategy::Complete,
        Strategy::RndMean,
        Strategy::RndMax,
        Strategy::Cca,
    ]
}
fn default_horizon() -> u32 {
    50
}
fn default_trajectories() -> usize {
    200
}
fn default_out() -> PathBuf {
    PathBuf::from("results")
}
fn default_delta() -> f64 {
    2.0
}
fn default_multiplier() -> f64 {
    HEURISTIC_MULTIPLIER
}
fn default_start_tests() -> usize {
    SearchGranularity::default().start_tests
}
fn default_coarse_divisor() -> usize {
    SearchGranularity::default().coarse_divisor
}
fn default_cap() -> usize {
    DEFAULT_ENUMERATION_CAP
}

/// Every key a config may contain.
pub const KEYS: &[&str] = &[
    "population",
    "community_size",
    "p_init",
    "q1",
    "q2",
    "recovery",
    "eta",
    "mode",
    "strategies",
    "decoder",
    "horizon",
    "trajectories",
    "seed",
    "threads",
    "out",
    "cca_rule",
    "log_base",
    "delta",
    "heuristic_multiplier",
    "start_tests",
    "coarse_divisor",
    "enumeration_cap",
];

pub const PRESETS: &[&str] = &["fig1", "fig4a", "fig4b", "fig6a", "fig6b", "fig7"];

/// Keys set by a named preset.
pub fn preset(name: &str) -> Result<Map<String, Value>, ConfigError> {
    let tuple = |n: usize, c: usize, p: f64, q1: f64, q2: f64| json!({"population": n, "community_size": c, "p_init": p, "q1": q1, "q2": q2, "recovery": 0.1});
    let (mut base, extra) = match name {
        "fig1" => (
            tuple(1000, 50, 0.02, 0.012, 0.0004),
            json!({"mode": "fixed_budget", "strategies": ["no_testing", "complete"]}),
        ),
        "fig4a" => (
            tuple(1000, 20, 0.02, 0.03, 0.0004),
            json!({"mode": "min_tests_search", "strategies": ["complete", "rnd_mean", "rnd_max", "cca"]}),
        ),
        "fig4b" => (
            tuple(1000, 50, 0.02, 0.012, 0.0004),
            json!({"mode": "min_tests_search", "strategies": ["complete", "rnd_mean", "rnd_max", "cca"]}),
        ),
        "fig6a" => (
            tuple(1000, 50, 0.02, 0.012, 0.0004),
            json!({"mode": "fixed_budget", "strategies": ["no_testing", "complete", "rnd_mean", "rnd_max", "cca"]}),
        ),
        "fig6b" => (
            tuple(5000, 50, 0.02, 0.012, 8e-5),
            json!({"mode": "fixed_budget", "strategies": ["no_testing", "complete", "rnd_mean", "rnd_max", "cca"]}),
        ),
        "fig7" => (
            tuple(1000, 50, 0.02, 0.012, 0.0004),
            json!({"mode": "continuous_comparison", "strategies": ["no_testing"]}),
        ),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    let map = base.as_object_mut().expect("object literal");
    map.extend(extra.as_object().expect("object literal").clone());
    map.insert("out".into(), json!(format!("results/{name}")));
    Ok(map.clone())
}

/// Values given on the command line or through the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub strategies: Vec<String>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub horizon: Option<u32>,
}

impl Overrides {
    fn apply(&self, map: &mut Map<String, Value>) {
        if !self.strategies.is_empty() {
            map.insert("strategies".into(), json!(self.strategies));
        }
        if let Some(v) = self.trajectories {
            map.insert("trajectories".into(), json!(v));
        }
        if let Some(v) = self.seed {
            map.insert("seed".into(), json!(v));
        }
        if let Some(v) = &self.out {
            map.insert("out".into(), json!(v));
        }
        if let Some(v) = self.threads {
            map.insert("threads".into(), json!(v));
        }
        if let Some(v) = self.horizon {
            map.insert("horizon".into(), json!(v));
        }
    }
}

pub fn read_object(path: &Path) -> Result<Map<String, Value>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_object(&text)
}

pub fn parse_object(text: &str) -> Result<Map<String, Value>, ConfigError> {
    match serde_json::from_str(text).map_err(ConfigError::Syntax)? {
        Value::Object(map) => Ok(map),
        _ => Err(ConfigError::NotAnObject),
    }
}

/// Preset, then file, then overrides; then defaults and validation.
pub fn resolve(
    preset_name: Option<&str>,
    file: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let mut map = match preset_name {
        Some(name) => preset(name)?,
        None => Map::new(),
    };
    if let Some(path) = file {
        map.extend(read_object(path)?);
    }
    overrides.apply(&mut map);
    from_object(map)
}

pub fn from_object(map: Map<String, Value>) -> Result<ExperimentConfig, ConfigError> {
    if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(key.clone()));
    }
    let cfg: ExperimentConfig = serde_json::from_value(Value::Object(map)).map_err(|e| {
        let msg = e.to_string();
        match msg
            .strip_prefix("missing field `")
            .and_then(|s| s.split('`').next())
        {
            Some(key) => ConfigError::MissingKey(key.to_string()),
            None => ConfigError::InvalidValue(msg),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    from_object(parse_object(text)?)
}

impl ExperimentConfig {
    pub fn model_params(&self) -> ModelParams {
        ModelParams {
            population: self.population,
            community_size: self.community_size,
            p_init: self.p_init,
            q1: self.q1,
            q2: self.q2,
            recovery: self.recovery,
            eta: self.eta,
        }
    }

    pub fn experiment(&self) -> Experiment {
        match self.mode {
            Mode::FixedBudget => Experiment::FixedBudget,
            Mode::MinTestsSearch | Mode::ContinuousComparison => Experiment::MinTestsSearch,
        }
    }

    pub fn policy(&self, strategy: Strategy) -> Policy {
        Policy {
            strategy,
            experiment: self.experiment(),
            decoder: self.decoder,
            granularity: SearchGranularity {
                start_tests: self.start_tests,
                coarse_divisor: self.coarse_divisor,
            },
            cca_rule: self.cca_rule,
            bounds: BoundParams {
                delta: self.delta,
                heuristic_multiplier: self.heuristic_multiplier,
                log_base: self.log_base,
            },
            enumeration_cap: self.enumeration_cap,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model_params().validate()?;
        let range = |ok: bool, key: &'static str, value: String, expected: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    key,
                    value,
                    expected,
                })
            }
        };
        range(
            self.horizon >= 1,
            "horizon",
            self.horizon.to_string(),
            "at least 1",
        )?;
        range(
            self.trajectories >= 1,
            "trajectories",
            self.trajectories.to_string(),
            "at least 1",
        )?;
        range(
            !self.strategies.is_empty(),
            "strategies",
            "[]".into(),
            "at least one strategy",
        )?;
        range(
            self.delta.is_finite() && self.delta >= 0.0,
            "delta",
            self.delta.to_string(),
            "a finite number >= 0",
        )?;
        range(
            self.heuristic_multiplier.is_finite() && self.heuristic_multiplier > 0.0,
            "heuristic_multiplier",
            self.heuristic_multiplier.to_string(),
            "a finite number > 0",
        )?;
        range(
            self.start_tests >= 1,
            "start_tests",
            self.start_tests.to_string(),
            "at least 1",
        )?;
        range(
            self.coarse_divisor >= 1,
            "coarse_divisor",
            self.coarse_divisor.to_string(),
            "at least 1",
        )?;
        range(
            self.decoder != DecoderKind::Map || self.population <= self.enumeration_cap,
            "population",
            self.population.to_string(),
            "at most enumeration_cap when decoder is map",
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REQUIRED: &str =
        r#"{"population": 100, "community_size": 10, "p_init": 0.02, "q1": 0.03, "q2": 0.001}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = parse_str(REQUIRED).unwrap();
        assert_eq!(cfg.recovery, 0.1);
        assert_eq!(cfg.delta, 2.0);
        assert_eq!(cfg.heuristic_multiplier, 12.0 * std::f64::consts::E);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.trajectories, 200);
        assert_eq!(cfg.mode, Mode::MinTestsSearch);
        assert_eq!(cfg.decoder, DecoderKind::Dd);
        assert_eq!(cfg.log_base, LogBase::Natural);
    }

    #[test]
    fn presets_carry_the_figure_tuples() {
        let a = resolve(Some("fig4a"), None, &Overrides::default()).unwrap();
        assert_eq!(
            (
                a.population,
                a.community_size,
                a.p_init,
                a.q1,
                a.q2,
                a.recovery
            ),
            (1000, 20, 0.02, 0.03, 0.0004, 0.1)
        );
        let b = resolve(Some("fig6b"), None, &Overrides::default()).unwrap();
        assert_eq!(
            (b.population, b.community_size, b.p_init, b.q1, b.q2),
            (5000, 50, 0.02, 0.012, 8e-5)
        );
        assert_eq!(b.mode, Mode::FixedBudget);
        for name in PRESETS {
            resolve(Some(name), None, &Overrides::default()).unwrap();
        }
    }

    #[test]
    fn diagnostics_are_distinct() {
        let unknown = parse_str(r#"{"population": 100, "communtiy_size": 10}"#);
        assert!(matches!(unknown, Err(ConfigError::UnknownKey(k)) if k == "communtiy_size"));

        let missing =
            parse_str(r#"{"population": 100, "community_size": 10, "p_init": 0.1, "q1": 0.1}"#);
        assert!(matches!(missing, Err(ConfigError::MissingKey(k)) if k == "q2"));

        let indivisible =
            parse_str(&REQUIRED.replace("\"community_size\": 10", "\"community_size\": 30"));
        assert!(matches!(
            indivisible,
            Err(ConfigError::Model(ModelError::IndivisiblePopulation { .. }))
        ));

        let range = parse_str(&REQUIRED.replace("0.02", "1.5"));
        assert!(matches!(
            range,
            Err(ConfigError::Model(ModelError::ProbabilityOutOfRange { .. }))
        ));

        let horizon = parse_str(&REQUIRED.replace('}', r#", "horizon": 0}"#));
        assert!(matches!(
            horizon,
            Err(ConfigError::OutOfRange { key: "horizon", .. })
        ));

        let variant = parse_str(&REQUIRED.replace('}', r#", "strategies": ["psychic"]}"#));
        assert!(matches!(variant, Err(ConfigError::InvalidValue(_))));

        assert!(matches!(parse_str("[1, 2]"), Err(ConfigError::NotAnObject)));
        assert!(matches!(parse_str("{"), Err(ConfigError::Syntax(_))));
        assert!(matches!(preset("fig9"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn overrides_win_over_file_and_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"trajectories": 7, "seed": 3}"#).unwrap();
        let overrides = Overrides {
            seed: Some(9),
            strategies: vec!["cca".into()],
            ..Overrides::default()
        };
        let cfg = resolve(Some("fig4b"), Some(&path), &overrides).unwrap();
        assert_eq!(cfg.trajectories, 7);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.strategies, vec![Strategy::Cca]);
        assert_eq!(cfg.community_size, 50);
    }

    #[test]
    fn every_key_is_listed() {
        let cfg = parse_str(REQUIRED).unwrap();
        let value = serde_json::to_value(&cfg).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), KEYS.len());
        for k in keys {
            assert!(KEYS.contains(&k.as_str()), "{k}");
        }
    }

    #[test]
    fn map_decoder_needs_small_population() {
        let err = parse_str(&REQUIRED.replace('}', r#", "decoder": "map"}"#));
        assert!(matches!(
            err,
            Err(ConfigError::OutOfRange {
                key: "population",
                ..
            })
        ));
    }
}
