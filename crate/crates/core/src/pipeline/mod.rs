//! The daily loop: state, priors, design, tests, decode, isolation, step.
//!
//! On day `t` the results of day `t - 1` arrive in the morning and the
//! positives go into isolation, the tester updates its priors, everyone still
//! outside isolation is tested against the true state, and the epidemic
//! advances one step.

mod harness;
mod search;

pub use harness::{
    curve_peak, discrete_mean_curve, gillespie_mean_curve, monte_carlo, monte_carlo_runs,
    Aggregate, DayMean,
};
pub use search::{
    candidate_seed, dd_recovers, min_tests_for_day, recovers, SearchGranularity, SearchOutcome,
    SearchSetup, StaticInstance,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{entropy_lower_bound, BoundParams};
use crate::decoders::{comp_decode, dd_decode, map_decode, DecodeError, DEFAULT_ENUMERATION_CAP};
use crate::designs::{
    apply_tests, cca_inclusion, column_weight, complete_design, CcaRule, RandomDesign, TestMatrix,
};
use crate::model::{ModelError, ModelParams, PopulationState, StatusVector};
use crate::priors::{EstimatorState, PriorVector};
use crate::rng::{lane, stream};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("MAP decoding needs pools of at most {cap} individuals, population is {population}")]
    MapPoolTooLarge { population: usize, cap: usize },
    #[error("horizon must be at least one day")]
    ZeroHorizon,
    #[error("at least one trajectory is required")]
    ZeroTrajectories,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    NoTesting,
    Complete,
    Cca,
    RndMax,
    RndMean,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::NoTesting,
        Strategy::Complete,
        Strategy::Cca,
        Strategy::RndMax,
        Strategy::RndMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NoTesting => "no_testing",
            Strategy::Complete => "complete",
            Strategy::Cca => "cca",
            Strategy::RndMax => "rnd_max",
            Strategy::RndMean => "rnd_mean",
        }
    }

    pub fn is_group(self) -> bool {
        matches!(self, Strategy::Cca | Strategy::RndMax | Strategy::RndMean)
    }

    /// The random design this strategy draws for `tests` tests, or `None` when
    /// it has nothing to randomize (baselines, or CCA on a zero-mass day, which
    /// gives an empty matrix).
    pub fn random_design(
        self,
        tests: usize,
        priors: &PriorVector<f64>,
        rule: CcaRule,
        seed: u64,
    ) -> Option<RandomDesign> {
        let summary = priors.summary();
        let constant = |p_ref: f64| {
            let (weight, _) = column_weight(tests, priors.len(), p_ref);
            RandomDesign::ConstantColumn {
                tests,
                weight,
                seed,
            }
        };
        match self {
            Strategy::NoTesting | Strategy::Complete => None,
            Strategy::RndMax => Some(constant(summary.max)),
            Strategy::RndMean => Some(constant(summary.mean)),
            Strategy::Cca => cca_inclusion(priors, rule).map(|inclusion| RandomDesign::Bernoulli {
                tests,
                inclusion,
                seed,
            }),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Each day, the fewest tests that recover that day's infections; the
    /// world then evolves as if every infection were found.
    #[default]
    MinTestsSearch,
    /// Group strategies get the heuristic budget and isolation follows the
    /// decoder's output.
    FixedBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    #[default]
    Dd,
    Comp,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub strategy: Strategy,
    pub experiment: Experiment,
    pub decoder: DecoderKind,
    pub granularity: SearchGranularity,
    pub cca_rule: CcaRule,
    pub bounds: BoundParams,
    pub enumeration_cap: usize,
}

impl Policy {
    pub fn new(strategy: Strategy, experiment: Experiment) -> Self {
        Self {
            strategy,
            experiment,
            decoder: DecoderKind::Dd,
            granularity: SearchGranularity::default(),
            cca_rule: CcaRule::Weighted,
            bounds: BoundParams::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_decoder(mut self, decoder: DecoderKind) -> Self {
        self.decoder = decoder;
        self
    }

    pub fn validate(&self, params: &ModelParams) -> Result<(), PipelineError> {
        params.validate()?;
        if self.decoder == DecoderKind::Map && params.population > self.enumeration_cap {
            return Err(PipelineError::MapPoolTooLarge {
                population: params.population,
                cap: self.enumeration_cap,
            });
        }
        Ok(())
    }

    fn search_setup(&self) -> SearchSetup {
        SearchSetup {
            strategy: self.strategy,
            decoder: self.decoder,
            granularity: self.granularity,
            cca_rule: self.cca_rule,
            enumeration_cap: self.enumeration_cap,
        }
    }
}

/// One day of one trajectory, measured at testing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: u32,
    /// Currently infected, isolated or not.
    pub infected: usize,
    /// Infected and outside isolation.
    pub active_infected: usize,
    pub tests_used: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
    pub isolated_total: usize,
    pub entropy_lb: f64,
    pub p_min: f64,
    pub p_mean: f64,
    pub p_max: f64,
    /// The search's starting budget did not recover the day's infections.
    pub search_failed: bool,
}

struct Pending {
    pool: Vec<usize>,
    decoded: StatusVector,
    tested_on: u32,
}

/// A single simulated trajectory under one policy.
pub struct Trajectory<'a> {
    params: &'a ModelParams,
    policy: &'a Policy,
    world: PopulationState,
    estimator: EstimatorState,
    pending: Option<Pending>,
    world_rng: ChaCha8Rng,
    design_rng: ChaCha8Rng,
}

impl<'a> Trajectory<'a> {
    pub fn new(
        params: &'a ModelParams,
        policy: &'a Policy,
        seed: u64,
    ) -> Result<Self, PipelineError> {
        policy.validate(params)?;
        let mut world_rng = stream(seed, lane::WORLD, 0);
        let world = PopulationState::init(params, &mut world_rng)?;
        Ok(Self {
            params,
            policy,
            world,
            estimator: EstimatorState::new(params),
            pending: None,
            world_rng,
            design_rng: stream(seed, lane::DESIGN, 0),
        })
    }

    pub fn world(&self) -> &PopulationState {
        &self.world
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    pub fn run_day(&mut self) -> Result<DayRecord, PipelineError> {
        let day = self.world.day();
        if let Some(p) = self.pending.take() {
            let ids =
                self.estimator
                    .update_from_decode(&p.decoded, &p.pool, p.tested_on, self.params);
            self.world.isolate(ids);
        }

        let pool = self.world.non_isolated();
        let truth = self.world.status_of(&pool);
        let strategy = self.policy.strategy;
        let priors = if strategy == Strategy::NoTesting {
            PriorVector::new(self.world.true_priors(&pool, self.params))
                .expect("model probabilities lie in [0, 1]")
        } else {
            self.estimator.pool_priors(&pool)
        };

        let (tests_used, decoded, search_failed) = match (strategy, self.policy.experiment) {
            (Strategy::NoTesting, _) => (0, None, false),
            (_, Experiment::MinTestsSearch) => {
                let instance = StaticInstance {
                    truth: truth.clone(),
                    priors: priors.clone(),
                };
                let day_seed = self.design_rng.random();
                let out = min_tests_for_day(&instance, &self.policy.search_setup(), day_seed)?;
                (out.tests, Some(truth.clone()), out.failed)
            }
            (_, Experiment::FixedBudget) => {
                let matrix = self.fixed_budget_design(&pool, &priors);
                let y = apply_tests(&matrix, &truth).expect("truth sized to the pool");
                let outcome = match self.policy.decoder {
                    DecoderKind::Dd => dd_decode(&matrix, &y)?,
                    DecoderKind::Comp => comp_decode(&matrix, &y)?,
                    DecoderKind::Map => {
                        map_decode(&matrix, &y, &priors, self.policy.enumeration_cap)?
                    }
                };
                (matrix.num_tests(), Some(outcome.estimate), false)
            }
        };

        let (false_negatives, false_positives) = match &decoded {
            None => (0, 0),
            Some(d) => truth
                .as_slice()
                .iter()
                .zip(d.as_slice())
                .fold((0, 0), |(fneg, fpos), (&u, &e)| {
                    (fneg + (u && !e) as usize, fpos + (!u && e) as usize)
                }),
        };
        let summary = priors.summary();
        let record = DayRecord {
            day,
            infected: self.world.infected_count(),
            active_infected: self.world.active_infected(),
            tests_used,
            false_negatives,
            false_positives,
            isolated_total: self.world.isolated_count(),
            entropy_lb: entropy_lower_bound(&priors),
            p_min: summary.min,
            p_mean: summary.mean,
            p_max: summary.max,
            search_failed,
        };
        if let Some(decoded) = decoded {
            self.pending = Some(Pending {
                pool,
                decoded,
                tested_on: day,
            });
        }
        self.world.step(self.params, &mut self.world_rng);
        Ok(record)
    }

    fn fixed_budget_design(&mut self, pool: &[usize], priors: &PriorVector<f64>) -> TestMatrix {
        let strategy = self.policy.strategy;
        if strategy == Strategy::Complete {
            return complete_design(pool);
        }
        let tests = self
            .policy
            .bounds
            .heuristic_budget(pool.len(), priors.summary().mean);
        let seed = self.design_rng.random();
        match strategy.random_design(tests, priors, self.policy.cca_rule, seed) {
            Some(design) => design.materialize(pool.to_vec()),
            None => TestMatrix::empty(pool.to_vec()),
        }
    }
}

/// Runs days `0..horizon` of one trajectory.
pub fn run_trajectory(
    params: &ModelParams,
    policy: &Policy,
    horizon: u32,
    seed: u64,
) -> Result<Vec<DayRecord>, PipelineError> {
    if horizon == 0 {
        return Err(PipelineError::ZeroHorizon);
    }
    let mut trajectory = Trajectory::new(params, policy, seed)?;
    (0..horizon).map(|_| trajectory.run_day()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelParams {
        ModelParams::new(200, 20, 0.05, 0.03, 0.002)
    }

    #[test]
    fn isolation_never_precedes_next_morning() {
        let params = small();
        for strategy in [Strategy::Complete, Strategy::Cca, Strategy::RndMean] {
            for experiment in [Experiment::MinTestsSearch, Experiment::FixedBudget] {
                let policy = Policy::new(strategy, experiment);
                let mut tr = Trajectory::new(&params, &policy, 7).unwrap();
                for _ in 0..20 {
                    tr.run_day().unwrap();
                }
                let w = tr.world();
                let mut isolated = 0;
                for i in 0..params.population {
                    if let Some(iso) = w.isolated_on()[i] {
                        isolated += 1;
                        let inf = w.infected_on()[i].expect("only infected people are isolated");
                        assert!(iso > inf, "{strategy:?} {experiment:?}: {i} {inf} {iso}");
                    }
                }
                assert!(isolated > 0);
            }
        }
    }

    #[test]
    fn complete_testing_finds_everyone_the_next_morning() {
        let params = small();
        let policy = Policy::new(Strategy::Complete, Experiment::FixedBudget);
        let mut tr = Trajectory::new(&params, &policy, 3).unwrap();
        for _ in 0..15 {
            let rec = tr.run_day().unwrap();
            assert_eq!(rec.false_negatives + rec.false_positives, 0);
            assert_eq!(rec.tests_used, params.population - rec.isolated_total);
        }
        let w = tr.world();
        for i in 0..params.population {
            if let (Some(inf), Some(iso)) = (w.infected_on()[i], w.isolated_on()[i]) {
                assert_eq!(iso, inf + 1);
            }
        }
    }

    #[test]
    fn day_zero_matches_initial_priors() {
        let params = ModelParams::new(1000, 20, 0.02, 0.03, 0.0004);
        let policy = Policy::new(Strategy::NoTesting, Experiment::MinTestsSearch);
        let recs = run_trajectory(&params, &policy, 2, 1).unwrap();
        assert!((recs[0].entropy_lb - 141.440542541821).abs() < 1e-9);
        assert_eq!(recs[0].tests_used, 0);
        assert_eq!(recs[0].p_min, 0.02);
    }

    #[test]
    fn strategies_share_the_initial_epidemic() {
        let params = small();
        let seed = 99;
        let day0: Vec<usize> = Strategy::ALL
            .iter()
            .map(|&s| {
                run_trajectory(
                    &params,
                    &Policy::new(s, Experiment::MinTestsSearch),
                    1,
                    seed,
                )
                .unwrap()[0]
                    .infected
            })
            .collect();
        assert!(day0.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn min_search_never_uses_more_than_the_pool() {
        let params = small();
        for strategy in [Strategy::Cca, Strategy::RndMax, Strategy::RndMean] {
            let policy = Policy::new(strategy, Experiment::MinTestsSearch);
            for rec in run_trajectory(&params, &policy, 25, 5).unwrap() {
                assert!(rec.tests_used <= params.population - rec.isolated_total);
                assert_eq!(rec.false_negatives + rec.false_positives, 0);
            }
        }
    }

    #[test]
    fn dd_heuristic_run_has_no_false_positives() {
        let params = small();
        for strategy in [Strategy::Cca, Strategy::RndMax, Strategy::RndMean] {
            let policy = Policy::new(strategy, Experiment::FixedBudget);
            for seed in 0..3 {
                for rec in run_trajectory(&params, &policy, 30, seed).unwrap() {
                    assert_eq!(rec.false_positives, 0);
                }
            }
        }
    }

    #[test]
    fn map_policy_is_refused_for_large_pools() {
        let policy =
            Policy::new(Strategy::Cca, Experiment::FixedBudget).with_decoder(DecoderKind::Map);
        assert!(matches!(
            run_trajectory(&small(), &policy, 3, 0),
            Err(PipelineError::MapPoolTooLarge { .. })
        ));
        let tiny = ModelParams::new(12, 4, 0.2, 0.1, 0.01);
        assert_eq!(run_trajectory(&tiny, &policy, 5, 0).unwrap().len(), 5);
    }

    #[test]
    fn same_seed_same_records() {
        let params = small();
        let policy = Policy::new(Strategy::RndMax, Experiment::MinTestsSearch);
        assert_eq!(
            run_trajectory(&params, &policy, 10, 4).unwrap(),
            run_trajectory(&params, &policy, 10, 4).unwrap()
        );
    }
}
