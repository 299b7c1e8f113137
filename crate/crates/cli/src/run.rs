//! Runs a configured experiment and writes its CSVs and manifest.

use std::fs;
use std::path::{Path, PathBuf};

use dyngt_core::pipeline::{
    discrete_mean_curve, gillespie_mean_curve, monte_carlo, Aggregate, PipelineError, Strategy,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ExperimentConfig, Mode};

pub const CSV_HEADER: [&str; 10] = [
    "day",
    "mean_infected",
    "mean_tests",
    "mean_false_neg",
    "mean_false_pos",
    "mean_isolated",
    "entropy_lb",
    "p_min",
    "p_mean",
    "p_max",
];

pub const COMPARISON_HEADER: [&str; 3] =
    ["day", "discrete_mean_infected", "continuous_mean_infected"];

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| RunError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    manifest.config.validate().map_err(|e| RunError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Per strategy, in config order; empty for the continuous comparison.
    pub aggregates: Vec<(Strategy, Aggregate)>,
}

pub fn csv_path(out: &Path, strategy: Strategy) -> PathBuf {
    out.join(format!("{}.csv", strategy.name()))
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn aggregate_rows(agg: &Aggregate) -> Vec<[String; 10]> {
    agg.days
        .iter()
        .map(|d| {
            [
                d.day.to_string(),
                fmt6(d.infected),
                fmt6(d.tests),
                fmt6(d.false_negatives),
                fmt6(d.false_positives),
                fmt6(d.isolated),
                fmt6(d.entropy_lb),
                fmt6(d.p_min),
                fmt6(d.p_mean),
                fmt6(d.p_max),
            ]
        })
        .collect()
}

fn write_csv<const K: usize>(
    path: &Path,
    header: [&str; K],
    rows: &[[String; K]],
) -> Result<(), RunError> {
    let csv_err = |source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Tracks files written so a failed run can remove them.
struct Outputs {
    files: Vec<PathBuf>,
}

impl Outputs {
    fn discard(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    fs::create_dir_all(&cfg.out).map_err(|source| RunError::Io {
        path: cfg.out.clone(),
        source,
    })?;
    let mut outputs = Outputs { files: Vec::new() };
    let mut aggregates = Vec::new();
    let result = write_all(cfg, &mut outputs, &mut aggregates);
    match result {
        Ok(()) => Ok(RunOutput {
            files: outputs.files,
            aggregates,
        }),
        Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

fn write_all(
    cfg: &ExperimentConfig,
    outputs: &mut Outputs,
    aggregates: &mut Vec<(Strategy, Aggregate)>,
) -> Result<(), RunError> {
    let params = cfg.model_params();
    if cfg.mode == Mode::ContinuousComparison {
        let discrete = discrete_mean_curve(&params, cfg.horizon, cfg.trajectories, cfg.seed)?;
        let continuous = gillespie_mean_curve(&params, cfg.horizon, cfg.trajectories, cfg.seed)?;
        let rows: Vec<[String; 3]> = discrete
            .iter()
            .zip(&continuous)
            .enumerate()
            .map(|(d, (a, b))| [d.to_string(), fmt6(*a), fmt6(*b)])
            .collect();
        let path = cfg.out.join("continuous_comparison.csv");
        outputs.files.push(path.clone());
        write_csv(&path, COMPARISON_HEADER, &rows)?;
    } else {
        for &strategy in &cfg.strategies {
            let agg = monte_carlo(
                &params,
                &cfg.policy(strategy),
                cfg.horizon,
                cfg.trajectories,
                cfg.seed,
                cfg.threads,
            )?;
            let path = csv_path(&cfg.out, strategy);
            outputs.files.push(path.clone());
            write_csv(&path, CSV_HEADER, &aggregate_rows(&agg))?;
            aggregates.push((strategy, agg));
        }
    }
    let path = cfg.out.join(MANIFEST);
    outputs.files.push(path.clone());
    let text = serde_json::to_string_pretty(&Manifest::new(cfg)).expect("config serializes");
    fs::write(&path, text + "\n").map_err(|source| RunError::Io { path, source })
}
