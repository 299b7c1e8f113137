//! Discrete-time SIR stochastic block model.
//!
//! Individuals `0..N` are split into consecutive blocks of `C`; individual `i`
//! belongs to community `i / C`. One call to [`PopulationState::step`] is one
//! day of dynamics:
//!
//! 1. every individual infected before today recovers with probability `r`;
//! 2. every non-isolated susceptible in community `j` is infected with
//!    probability [`infection_probability`] evaluated on the non-isolated
//!    infected counts as they stood at the start of the day.
//!
//! Isolated individuals neither transmit nor get infected, but an isolated
//! infected individual still recovers, so day-level infected counts include
//! people in isolation.

pub mod gillespie;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gillespie::gillespie_trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("population must be positive")]
    EmptyPopulation,
    #[error("community size must be positive")]
    EmptyCommunity,
    #[error("population {population} is not a multiple of community size {community_size}")]
    IndivisiblePopulation {
        population: usize,
        community_size: usize,
    },
    #[error("{name} = {value} is not a probability")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("inter-community rate q2 = {q2} exceeds intra-community rate q1 = {q1}")]
    InterExceedsIntra { q1: f64, q2: f64 },
    #[error("eta = {eta} is below q1/q2 = {ratio}")]
    EtaTooSmall { eta: f64, ratio: f64 },
}

/// Constants of the block model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Population size `N`.
    pub population: usize,
    /// Community size `C`.
    pub community_size: usize,
    /// Day-0 infection probability.
    pub p_init: f64,
    /// Daily per-contact transmission probability inside a community.
    pub q1: f64,
    /// Daily per-contact transmission probability across communities.
    pub q2: f64,
    /// Daily recovery probability.
    pub recovery: f64,
    /// Optional prior-boundedness constant.
    pub eta: Option<f64>,
}

pub const DEFAULT_RECOVERY: f64 = 0.1;

impl ModelParams {
    /// Builds parameters from the `(N, C, p_init, q1, q2)` tuple with the
    /// default recovery probability.
    pub fn new(population: usize, community_size: usize, p_init: f64, q1: f64, q2: f64) -> Self {
        Self {
            population,
            community_size,
            p_init,
            q1,
            q2,
            recovery: DEFAULT_RECOVERY,
            eta: None,
        }
    }

    pub fn with_recovery(mut self, recovery: f64) -> Self {
        self.recovery = recovery;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.population == 0 {
            return Err(ModelError::EmptyPopulation);
        }
        if self.community_size == 0 {
            return Err(ModelError::EmptyCommunity);
        }
        if !self.population.is_multiple_of(self.community_size) {
            return Err(ModelError::IndivisiblePopulation {
                population: self.population,
                community_size: self.community_size,
            });
        }
        for (name, value) in [
            ("p_init", self.p_init),
            ("q1", self.q1),
            ("q2", self.q2),
            ("r", self.recovery),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::ProbabilityOutOfRange { name, value });
            }
        }
        if self.q2 > self.q1 {
            return Err(ModelError::InterExceedsIntra {
                q1: self.q1,
                q2: self.q2,
            });
        }
        if let Some(eta) = self.eta {
            if self.q2 > 0.0 && self.q1 > 0.0 && eta < self.q1 / self.q2 {
                return Err(ModelError::EtaTooSmall {
                    eta,
                    ratio: self.q1 / self.q2,
                });
            }
        }
        Ok(())
    }

    pub fn communities(&self) -> usize {
        self.population / self.community_size
    }

    pub fn community_of(&self, individual: usize) -> usize {
        individual / self.community_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HealthState {
    Susceptible,
    Infected,
    Recovered,
}

/// Infection statuses of a pool; `true` means infected.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StatusVector(pub Vec<bool>);

impl StatusVector {
    pub fn healthy(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &u)| u)
            .map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&u| u).count()
    }
}

impl From<Vec<bool>> for StatusVector {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

/// Probability that a susceptible with `own` infectious contacts in its
/// community and `others` elsewhere is infected in one day.
pub fn transmission_probability<F: Float>(own: usize, others: usize, q1: F, q2: F) -> F {
    let stay_intra = (F::one() - q1).powi(saturating_i32(own));
    let stay_inter = (F::one() - q2).powi(saturating_i32(others));
    F::one() - stay_intra * stay_inter
}

fn saturating_i32(x: usize) -> i32 {
    i32::try_from(x).unwrap_or(i32::MAX)
}

/// `1 - (1 - q1)^I_j (1 - q2)^(sum of the other I_j')` for community `j`.
pub fn infection_probability(counts: &[usize], community: usize, params: &ModelParams) -> f64 {
    let total: usize = counts.iter().sum();
    let own = counts[community];
    transmission_probability(own, total - own, params.q1, params.q2)
}

/// Per-community probabilities for every community.
pub fn community_probabilities(counts: &[usize], params: &ModelParams) -> Vec<f64> {
    (0..counts.len())
        .map(|j| infection_probability(counts, j, params))
        .collect()
}

/// Ground-truth state of the population.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    day: u32,
    community_size: usize,
    states: Vec<HealthState>,
    isolated: Vec<bool>,
    new_infections: Vec<usize>,
    /// Non-isolated infected per community that drove the most recent step.
    last_infectious: Option<Vec<usize>>,
    infected_on: Vec<Option<u32>>,
    isolated_on: Vec<Option<u32>>,
}

impl PopulationState {
    /// Day-0 population: everyone independently infected with probability `p_init`.
    pub fn init<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<Self, ModelError> {
        params.validate()?;
        let n = params.population;
        let mut states = vec![HealthState::Susceptible; n];
        let mut infected_on = vec![None; n];
        let mut new_infections = vec![0; params.communities()];
        for i in 0..n {
            if rng.random::<f64>() < params.p_init {
                states[i] = HealthState::Infected;
                infected_on[i] = Some(0);
                new_infections[params.community_of(i)] += 1;
            }
        }
        Ok(Self {
            day: 0,
            community_size: params.community_size,
            states,
            isolated: vec![false; n],
            new_infections,
            last_infectious: None,
            infected_on,
            isolated_on: vec![None; n],
        })
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn population(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[HealthState] {
        &self.states
    }

    pub fn isolated(&self) -> &[bool] {
        &self.isolated
    }

    pub fn community_of(&self, individual: usize) -> usize {
        individual / self.community_size
    }

    pub fn communities(&self) -> usize {
        self.states.len() / self.community_size
    }

    /// New infections of the latest day (day-0 seeds on day 0) that are still
    /// outside isolation, per community.
    pub fn new_infections_by_community(&self) -> &[usize] {
        &self.new_infections
    }

    /// Day on which each individual first showed up infected.
    pub fn infected_on(&self) -> &[Option<u32>] {
        &self.infected_on
    }

    /// Day on which each individual was isolated.
    pub fn isolated_on(&self) -> &[Option<u32>] {
        &self.isolated_on
    }

    /// `(#S, #I, #R)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.states.iter().fold((0, 0, 0), |(s, i, r), x| match x {
            HealthState::Susceptible => (s + 1, i, r),
            HealthState::Infected => (s, i + 1, r),
            HealthState::Recovered => (s, i, r + 1),
        })
    }

    /// Everyone currently infected, isolated or not.
    pub fn infected_count(&self) -> usize {
        self.counts().1
    }

    pub fn isolated_count(&self) -> usize {
        self.isolated.iter().filter(|&&x| x).count()
    }

    /// Non-isolated infected per community.
    pub fn infectious_by_community(&self) -> Vec<usize> {
        let mut counts = vec![0; self.communities()];
        for (i, state) in self.states.iter().enumerate() {
            if *state == HealthState::Infected && !self.isolated[i] {
                counts[self.community_of(i)] += 1;
            }
        }
        counts
    }

    pub fn active_infected(&self) -> usize {
        self.infectious_by_community().iter().sum()
    }

    /// Individuals not in isolation, in index order.
    pub fn non_isolated(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| !self.isolated[i])
            .collect()
    }

    /// Infection statuses of `pool` members.
    pub fn status_of(&self, pool: &[usize]) -> StatusVector {
        StatusVector(
            pool.iter()
                .map(|&i| self.states[i] == HealthState::Infected)
                .collect(),
        )
    }

    /// The true probability that each `pool` member was newly infected by the
    /// most recent step; `p_init` on day 0. Members that were not susceptible
    /// going into that step get 0.
    pub fn true_priors(&self, pool: &[usize], params: &ModelParams) -> Vec<f64> {
        match &self.last_infectious {
            None => vec![params.p_init; pool.len()],
            Some(counts) => {
                let per_community = community_probabilities(counts, params);
                pool.iter()
                    .map(|&i| {
                        let exposed = match self.states[i] {
                            HealthState::Susceptible => !self.isolated[i],
                            _ => self.infected_on[i] == Some(self.day),
                        };
                        if exposed {
                            per_community[self.community_of(i)]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
        }
    }

    /// Removes `ids` from the dynamics for good. Idempotent.
    pub fn isolate<I: IntoIterator<Item = usize>>(&mut self, ids: I) {
        for i in ids {
            if !self.isolated[i] {
                self.isolated[i] = true;
                self.isolated_on[i] = Some(self.day);
                if self.infected_on[i] == Some(self.day) {
                    let c = self.community_of(i);
                    self.new_infections[c] -= 1;
                }
            }
        }
    }

    /// Advances one day and returns the per-community counts of new infections.
    pub fn step<R: Rng + ?Sized>(&mut self, params: &ModelParams, rng: &mut R) -> Vec<usize> {
        let infectious = self.infectious_by_community();
        let probabilities = community_probabilities(&infectious, params);
        let today = self.day + 1;
        let mut new_infections = vec![0; infectious.len()];

        for i in 0..self.states.len() {
            match self.states[i] {
                HealthState::Infected => {
                    if rng.random::<f64>() < params.recovery {
                        self.states[i] = HealthState::Recovered;
                    }
                }
                HealthState::Susceptible if !self.isolated[i] => {
                    let c = self.community_of(i);
                    let p = probabilities[c];
                    if p > 0.0 && rng.random::<f64>() < p {
                        self.states[i] = HealthState::Infected;
                        self.infected_on[i] = Some(today);
                        new_infections[c] += 1;
                    }
                }
                _ => {}
            }
        }

        self.day = today;
        self.last_infectious = Some(infectious);
        self.new_infections = new_infections.clone();
        new_infections
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::new(100, 10, 0.1, 0.05, 0.005)
    }

    #[test]
    fn validation_reports_each_problem() {
        let mut p = params();
        p.community_size = 30;
        assert!(matches!(
            p.validate(),
            Err(ModelError::IndivisiblePopulation { .. })
        ));
        let mut p = params();
        p.q1 = 1.5;
        assert!(matches!(
            p.validate(),
            Err(ModelError::ProbabilityOutOfRange { name: "q1", .. })
        ));
        let mut p = params();
        p.q2 = 0.1;
        assert!(matches!(
            p.validate(),
            Err(ModelError::InterExceedsIntra { .. })
        ));
        let mut p = params();
        p.eta = Some(2.0);
        assert!(matches!(p.validate(), Err(ModelError::EtaTooSmall { .. })));
        p.eta = Some(10.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn init_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = params();
        p.p_init = 0.0;
        let s = PopulationState::init(&p, &mut rng).unwrap();
        assert_eq!(s.counts(), (100, 0, 0));
        assert!(s.new_infections_by_community().iter().all(|&c| c == 0));

        p.p_init = 1.0;
        let s = PopulationState::init(&p, &mut rng).unwrap();
        assert_eq!(s.counts(), (0, 100, 0));
        assert_eq!(s.new_infections_by_community().iter().sum::<usize>(), 100);
        assert_eq!(s.day(), 0);
        assert_eq!(s.isolated_count(), 0);
    }

    #[test]
    fn infection_probability_closed_form() {
        let p = params();
        let zero = vec![0; 10];
        assert_eq!(infection_probability(&zero, 3, &p), 0.0);
        let mut one = zero.clone();
        one[3] = 1;
        assert!((infection_probability(&one, 3, &p) - p.q1).abs() < 1e-15);
        assert!((infection_probability(&one, 4, &p) - p.q2).abs() < 1e-15);

        let q = ModelParams::new(100, 10, 0.1, 0.1, 0.01);
        let mut counts = vec![0; 10];
        counts[0] = 2;
        counts[5] = 3;
        let expected = 1.0 - 0.9_f64.powi(2) * 0.99_f64.powi(3);
        assert!((infection_probability(&counts, 0, &q) - expected).abs() < 1e-15);
        assert!((expected - 0.214058).abs() < 1e-6);
    }

    #[test]
    fn disease_free_state_is_absorbing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = params();
        p.p_init = 0.0;
        let mut s = PopulationState::init(&p, &mut rng).unwrap();
        let before = s.states().to_vec();
        let new = s.step(&p, &mut rng);
        assert_eq!(s.day(), 1);
        assert!(new.iter().all(|&c| c == 0));
        assert_eq!(s.states(), &before[..]);
    }

    #[test]
    fn forced_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ModelParams::new(100, 10, 0.5, 0.0, 0.0).with_recovery(1.0);
        let mut s = PopulationState::init(&p, &mut rng).unwrap();
        let infected = s.infected_count();
        assert!(infected > 0);
        s.step(&p, &mut rng);
        assert_eq!(s.counts(), (100 - infected, 0, infected));
    }

    #[test]
    fn isolation_is_idempotent_and_stops_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ModelParams::new(100, 10, 0.2, 0.3, 0.01);
        let mut s = PopulationState::init(&p, &mut rng).unwrap();
        let snapshot = s.clone();
        s.isolate(std::iter::empty());
        assert_eq!(s, snapshot);

        let infected: Vec<usize> = (0..100)
            .filter(|&i| s.states()[i] == HealthState::Infected)
            .collect();
        s.isolate(infected.iter().copied());
        let once = s.clone();
        s.isolate(infected.iter().copied());
        assert_eq!(s, once);
        assert!(s.new_infections_by_community().iter().all(|&c| c == 0));

        let new = s.step(&p, &mut rng);
        assert_eq!(new.iter().sum::<usize>(), 0);
    }

    #[test]
    fn closed_form_matches_per_contact_sampling() {
        // One community of 5: 2 infected, 3 susceptible, q1 = 0.2.
        let p = ModelParams::new(5, 5, 0.0, 0.2, 0.0).with_recovery(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let template = {
            let mut s = PopulationState::init(&p, &mut rng).unwrap();
            s.states[0] = HealthState::Infected;
            s.states[1] = HealthState::Infected;
            s
        };
        let steps = 100_000;
        let mut closed_form = 0usize;
        let mut per_contact = 0usize;
        for _ in 0..steps {
            let mut s = template.clone();
            let new = s.step(&p, &mut rng);
            closed_form += new[0];
            for _ in 0..3 {
                if (0..2).any(|_| rng.random::<f64>() < 0.2) {
                    per_contact += 1;
                }
            }
        }
        let trials = (3 * steps) as f64;
        let target = 1.0 - 0.8_f64 * 0.8;
        let se = (target * (1.0 - target) / trials).sqrt();
        let f_closed = closed_form as f64 / trials;
        let f_contact = per_contact as f64 / trials;
        assert!((f_closed - target).abs() < 3.0 * se, "{f_closed}");
        assert!((f_contact - target).abs() < 3.0 * se, "{f_contact}");
    }

    #[test]
    fn seeded_runs_are_identical() {
        let p = ModelParams::new(200, 20, 0.05, 0.05, 0.002);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = PopulationState::init(&p, &mut rng).unwrap();
            for _ in 0..20 {
                s.step(&p, &mut rng);
            }
            s
        };
        assert_eq!(run(9), run(9));
    }
}
