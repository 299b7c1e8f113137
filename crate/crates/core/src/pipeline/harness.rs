//! Monte Carlo over trajectories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trajectory, DayRecord, PipelineError, Policy};
use crate::model::{gillespie_trajectory, ModelParams, PopulationState};
use crate::rng::{derive_seed, lane, stream};

/// Per-day means over trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayMean {
    pub day: u32,
    pub infected: f64,
    pub active_infected: f64,
    pub tests: f64,
    pub false_negatives: f64,
    pub false_positives: f64,
    pub isolated: f64,
    pub entropy_lb: f64,
    pub p_min: f64,
    pub p_mean: f64,
    pub p_max: f64,
    /// Trajectories whose search failed on this day.
    pub search_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trajectories: usize,
    pub days: Vec<DayMean>,
}

impl Aggregate {
    pub fn from_runs(runs: &[Vec<DayRecord>]) -> Self {
        let horizon = runs.first().map_or(0, Vec::len);
        let r = runs.len() as f64;
        let days = (0..horizon)
            .map(|d| {
                let mean = |f: &dyn Fn(&DayRecord) -> f64| {
                    runs.iter().map(|run| f(&run[d])).sum::<f64>() / r
                };
                DayMean {
                    day: d as u32,
                    infected: mean(&|x| x.infected as f64),
                    active_infected: mean(&|x| x.active_infected as f64),
                    tests: mean(&|x| x.tests_used as f64),
                    false_negatives: mean(&|x| x.false_negatives as f64),
                    false_positives: mean(&|x| x.false_positives as f64),
                    isolated: mean(&|x| x.isolated_total as f64),
                    entropy_lb: mean(&|x| x.entropy_lb),
                    p_min: mean(&|x| x.p_min),
                    p_mean: mean(&|x| x.p_mean),
                    p_max: mean(&|x| x.p_max),
                    search_failures: runs.iter().filter(|run| run[d].search_failed).count(),
                }
            })
            .collect();
        Self {
            trajectories: runs.len(),
            days,
        }
    }

    /// `(day, mean infected)` at the peak; the earliest day on ties.
    pub fn peak_infected(&self) -> Option<(u32, f64)> {
        peak(self.days.iter().map(|d| d.infected))
    }
}

fn peak(values: impl Iterator<Item = f64>) -> Option<(u32, f64)> {
    values
        .enumerate()
        .fold(None, |best: Option<(u32, f64)>, (d, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((d as u32, v)),
        })
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Every trajectory's records, in trajectory order. Trajectory `k` uses seed
/// `derive_seed(base_seed, 0, k)`, so results do not depend on `threads`
/// (0 means rayon's global pool).
pub fn monte_carlo_runs(
    params: &ModelParams,
    policy: &Policy,
    horizon: u32,
    trajectories: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Vec<Vec<DayRecord>>, PipelineError> {
    if trajectories == 0 {
        return Err(PipelineError::ZeroTrajectories);
    }
    policy.validate(params)?;
    in_pool(threads, || {
        (0..trajectories)
            .into_par_iter()
            .map(|k| run_trajectory(params, policy, horizon, derive_seed(base_seed, 0, k as u64)))
            .collect()
    })
}

pub fn monte_carlo(
    params: &ModelParams,
    policy: &Policy,
    horizon: u32,
    trajectories: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Aggregate, PipelineError> {
    let runs = monte_carlo_runs(params, policy, horizon, trajectories, base_seed, threads)?;
    Ok(Aggregate::from_runs(&runs))
}

/// Mean infected per day of the discrete-time model without testing.
pub fn discrete_mean_curve(
    params: &ModelParams,
    horizon: u32,
    trajectories: usize,
    base_seed: u64,
) -> Result<Vec<f64>, PipelineError> {
    if trajectories == 0 {
        return Err(PipelineError::ZeroTrajectories);
    }
    let runs: Vec<Vec<usize>> = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(derive_seed(base_seed, 0, k as u64), lane::WORLD, 0);
            let mut world = PopulationState::init(params, &mut rng)?;
            let mut curve = Vec::with_capacity(horizon as usize);
            for _ in 0..horizon {
                curve.push(world.infected_count());
                world.step(params, &mut rng);
            }
            Ok(curve)
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(mean_curve(&runs, horizon))
}

/// Mean infected per day of the continuous-time counterpart.
pub fn gillespie_mean_curve(
    params: &ModelParams,
    horizon: u32,
    trajectories: usize,
    base_seed: u64,
) -> Result<Vec<f64>, PipelineError> {
    if trajectories == 0 {
        return Err(PipelineError::ZeroTrajectories);
    }
    let runs: Vec<Vec<usize>> = (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(derive_seed(base_seed, 0, k as u64), lane::ORACLE, 0);
            gillespie_trajectory(params, horizon as usize, &mut rng).map_err(PipelineError::from)
        })
        .collect::<Result<_, _>>()?;
    Ok(mean_curve(&runs, horizon))
}

fn mean_curve(runs: &[Vec<usize>], horizon: u32) -> Vec<f64> {
    (0..horizon as usize)
        .map(|d| runs.iter().map(|r| r[d] as f64).sum::<f64>() / runs.len() as f64)
        .collect()
}

/// `(day, value)` of the largest entry; the earliest day on ties.
pub fn curve_peak(curve: &[f64]) -> Option<(u32, f64)> {
    peak(curve.iter().copied())
}
