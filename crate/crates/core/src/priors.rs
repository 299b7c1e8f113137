//! The tester's side: daily prior vectors and the belief state that feeds them.
//!
//! Given yesterday's (believed) infected counts per community, every
//! susceptible in community `j` is infected independently with the community
//! probability, which turns each day into a static group-testing instance with
//! non-identical priors.

use thiserror::Error;

use crate::model::{community_probabilities, ModelParams, StatusVector};
use crate::scalar::Probability;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("prior {index} = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

/// Per-item infection probabilities of one static instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorVector<P> {
    probs: Vec<P>,
}

impl<P: Probability> PriorVector<P> {
    pub fn new(probs: Vec<P>) -> Result<Self, PriorError> {
        for (index, p) in probs.iter().enumerate() {
            if *p < P::zero() || *p > P::one() {
                return Err(PriorError::OutOfRange {
                    index,
                    value: p.as_f64(),
                });
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(len: usize, p: P) -> Self {
        Self {
            probs: vec![p; len],
        }
    }

    pub fn as_slice(&self) -> &[P] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min(&self) -> Option<P> {
        self.probs
            .iter()
            .cloned()
            .reduce(|a, b| if b < a { b } else { a })
    }

    pub fn max(&self) -> Option<P> {
        self.probs
            .iter()
            .cloned()
            .reduce(|a, b| if b > a { b } else { a })
    }

    /// Expected number of defectives, `k̄ = Σ p_i`.
    pub fn expected_defectives(&self) -> P {
        self.probs.iter().cloned().fold(P::zero(), |a, b| a + b)
    }

    pub fn mean(&self) -> Option<P> {
        if self.probs.is_empty() {
            return None;
        }
        let n = P::from_usize(self.probs.len())?;
        Some(self.expected_defectives() / n)
    }

    /// A copy with entry `index` replaced.
    pub fn with_entry(&self, index: usize, p: P) -> Self {
        let mut probs = self.probs.clone();
        probs[index] = p;
        Self { probs }
    }

    /// `(p_min, p_mean, p_max)` as floats, zeros for an empty vector.
    pub fn summary(&self) -> PriorSummary {
        PriorSummary {
            min: self.min().map_or(0.0, |p| p.as_f64()),
            mean: self.mean().map_or(0.0, |p| p.as_f64()),
            max: self.max().map_or(0.0, |p| p.as_f64()),
            expected_defectives: self.expected_defectives().as_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PriorSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub expected_defectives: f64,
}

/// Priors for `pool` members from per-community infected counts.
pub fn compute_priors(counts: &[usize], pool: &[usize], params: &ModelParams) -> PriorVector<f64> {
    let per_community = community_probabilities(counts, params);
    PriorVector {
        probs: pool
            .iter()
            .map(|&i| per_community[params.community_of(i)])
            .collect(),
    }
}

/// Diagnostic on how spread out a prior vector is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundednessReport {
    /// `p_max / p_min`, `None` when the vector is empty or `p_min = 0`.
    pub ratio: Option<f64>,
    pub all_at_most_half: bool,
    /// `ratio <= eta`, when both are known.
    pub within_eta: Option<bool>,
}

pub fn boundedness_report<P: Probability>(
    pv: &PriorVector<P>,
    eta: Option<f64>,
) -> BoundednessReport {
    let half = P::from_f64(0.5).expect("0.5 is representable");
    let all_at_most_half = pv.as_slice().iter().all(|p| *p <= half);
    let ratio = match (pv.min(), pv.max()) {
        (Some(lo), Some(hi)) if !lo.is_zero() => Some(hi.as_f64() / lo.as_f64()),
        _ => None,
    };
    BoundednessReport {
        ratio,
        all_at_most_half,
        within_eta: ratio.zip(eta).map(|(r, e)| r <= e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Belief {
    /// Not identified as infected; treated as susceptible.
    Unresolved,
    /// Decoded positive on the given testing day and sent to isolation.
    Identified { tested_on: u32 },
}

/// What the tester believes about the population.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    community_size: usize,
    believed_status: Vec<Belief>,
    /// Believed infected per community on the latest testing day; `None` before
    /// any results have arrived.
    believed_new_infections: Option<Vec<usize>>,
    priors: Vec<f64>,
}

impl EstimatorState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            community_size: params.community_size,
            believed_status: vec![Belief::Unresolved; params.population],
            believed_new_infections: None,
            priors: vec![params.p_init; params.population],
        }
    }

    pub fn believed_status(&self) -> &[Belief] {
        &self.believed_status
    }

    pub fn believed_new_infections(&self) -> Option<&[usize]> {
        self.believed_new_infections.as_deref()
    }

    /// Per-individual prior; 0 for anyone already identified.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Folds in the decode of the tests given to `pool` on `tested_on` and
    /// returns the individuals to isolate.
    pub fn update_from_decode(
        &mut self,
        decoded: &StatusVector,
        pool: &[usize],
        tested_on: u32,
        params: &ModelParams,
    ) -> Vec<usize> {
        assert_eq!(
            decoded.len(),
            pool.len(),
            "one decoded status per pool member"
        );
        let mut counts = vec![0usize; params.communities()];
        let mut positives = Vec::new();
        for pos in decoded.positives() {
            let id = pool[pos];
            self.believed_status[id] = Belief::Identified { tested_on };
            counts[id / self.community_size] += 1;
            positives.push(id);
        }
        let per_community = community_probabilities(&counts, params);
        for (id, prior) in self.priors.iter_mut().enumerate() {
            *prior = match self.believed_status[id] {
                Belief::Identified { .. } => 0.0,
                Belief::Unresolved => per_community[id / self.community_size],
            };
        }
        self.believed_new_infections = Some(counts);
        positives
    }

    pub fn pool_priors(&self, pool: &[usize]) -> PriorVector<f64> {
        PriorVector {
            probs: pool.iter().map(|&i| self.priors[i]).collect(),
        }
    }
}
