//! Smallest number of tests for which a strategy recovers one day's infections.

use serde::{Deserialize, Serialize};

use super::{DecoderKind, Strategy};
use crate::decoders::{comp_decode, dd_decode, map_decode, DecodeError};
use crate::designs::{apply_tests, CcaRule, RandomDesign};
use crate::model::StatusVector;
use crate::priors::PriorVector;
use crate::rng::derive_seed;

/// A frozen static instance: pool positions `0..n`, their true statuses and
/// priors.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticInstance {
    pub truth: StatusVector,
    pub priors: PriorVector<f64>,
}

impl StaticInstance {
    pub fn pool_size(&self) -> usize {
        self.truth.len()
    }
}

/// Grid used by the descending search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchGranularity {
    /// Budget tried first, capped at the pool size.
    pub start_tests: usize,
    /// Coarse step is `max(1, pool / coarse_divisor)`.
    pub coarse_divisor: usize,
}

impl Default for SearchGranularity {
    fn default() -> Self {
        Self {
            start_tests: 1000,
            coarse_divisor: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    pub tests: usize,
    /// Even the starting budget did not recover the truth.
    pub failed: bool,
}

/// Everything a strategy needs besides the instance.
#[derive(Debug, Clone, Copy)]
pub struct SearchSetup {
    pub strategy: Strategy,
    pub decoder: DecoderKind,
    pub granularity: SearchGranularity,
    pub cca_rule: CcaRule,
    pub enumeration_cap: usize,
}

/// Design seed for budget `tests` on a day seeded with `day_seed`; depends only
/// on the pair, so any `(tests, day_seed)` outcome can be replayed.
pub fn candidate_seed(day_seed: u64, tests: usize) -> u64 {
    derive_seed(day_seed, 0, tests as u64)
}

/// Starting from `min(start_tests, n)`, lower the budget on a coarse grid until
/// the strategy fails, then walk back up one test at a time; if it never fails
/// on the grid, keep lowering one at a time. Each candidate gets a fresh
/// design.
pub fn min_tests_for_day(
    instance: &StaticInstance,
    setup: &SearchSetup,
    day_seed: u64,
) -> Result<SearchOutcome, DecodeError> {
    let n = instance.pool_size();
    if setup.strategy == Strategy::Complete {
        return Ok(SearchOutcome {
            tests: n,
            failed: false,
        });
    }
    if n == 0 {
        return Ok(SearchOutcome {
            tests: 0,
            failed: false,
        });
    }
    let works = |tests: usize| recovers(instance, setup, tests, candidate_seed(day_seed, tests));

    let start = setup.granularity.start_tests.min(n).max(1);
    if !works(start)? {
        return Ok(SearchOutcome {
            tests: start,
            failed: true,
        });
    }
    let step = (n / setup.granularity.coarse_divisor.max(1)).max(1);
    let mut last_ok = start;
    let mut failed_at = None;
    while last_ok > step {
        let t = last_ok - step;
        if works(t)? {
            last_ok = t;
        } else {
            failed_at = Some(t);
            break;
        }
    }
    match failed_at {
        Some(fail) => {
            for t in fail + 1..last_ok {
                if works(t)? {
                    return Ok(SearchOutcome {
                        tests: t,
                        failed: false,
                    });
                }
            }
        }
        None => {
            while last_ok > 1 && works(last_ok - 1)? {
                last_ok -= 1;
            }
        }
    }
    Ok(SearchOutcome {
        tests: last_ok,
        failed: false,
    })
}

/// Does `strategy` with `tests` tests and this design seed decode the truth
/// exactly?
pub fn recovers(
    instance: &StaticInstance,
    setup: &SearchSetup,
    tests: usize,
    seed: u64,
) -> Result<bool, DecodeError> {
    let design = setup
        .strategy
        .random_design(tests, &instance.priors, setup.cca_rule, seed);
    match setup.decoder {
        DecoderKind::Dd => Ok(match &design {
            Some(d) => dd_recovers(d, instance.truth.as_slice()),
            None => instance.truth.count() == 0,
        }),
        kind => {
            let pool: Vec<usize> = (0..instance.pool_size()).collect();
            let matrix = match &design {
                Some(d) => d.materialize(pool),
                None => crate::designs::TestMatrix::empty(pool),
            };
            let y = apply_tests(&matrix, &instance.truth).expect("truth sized to the pool");
            let estimate = match kind {
                DecoderKind::Comp => comp_decode(&matrix, &y)?,
                DecoderKind::Map => {
                    map_decode(&matrix, &y, &instance.priors, setup.enumeration_cap)?
                }
                DecoderKind::Dd => dd_decode(&matrix, &y)?,
            }
            .estimate;
            Ok(estimate == instance.truth)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Nobody,
    One(usize),
    Several,
}

/// Exactly `dd_decode(materialize(design), y) == truth`, reading columns only
/// as far as the outcome depends on them.
///
/// DD recovers the truth iff every infected item has a test in which it is the
/// only infected member and every other member is cleared by some negative
/// test. A healthy member's column can stop at its first negative test, and
/// only uncleared healthy members need their full column.
pub fn dd_recovers(design: &RandomDesign, truth: &[bool]) -> bool {
    let infected: Vec<usize> = (0..truth.len()).filter(|&i| truth[i]).collect();
    if infected.is_empty() {
        return true;
    }
    let tests = design.num_tests();
    let mut owner = vec![Owner::Nobody; tests];
    for (k, &i) in infected.iter().enumerate() {
        for t in design.column(i) {
            owner[t] = match owner[t] {
                Owner::Nobody => Owner::One(k),
                _ => Owner::Several,
            };
        }
    }
    let mut witnesses = vec![0usize; infected.len()];
    for o in &owner {
        if let Owner::One(k) = o {
            witnesses[*k] += 1;
        }
    }
    if witnesses.contains(&0) {
        return false;
    }

    let mut blocked = vec![false; tests];
    let mut seen = Vec::new();
    for (member, _) in truth.iter().enumerate().filter(|(_, &u)| !u) {
        seen.clear();
        let mut cleared = false;
        for t in design.column(member) {
            if owner[t] == Owner::Nobody {
                cleared = true;
                break;
            }
            seen.push(t);
        }
        if cleared {
            continue;
        }
        for &t in &seen {
            if let Owner::One(k) = owner[t] {
                if !blocked[t] {
                    blocked[t] = true;
                    witnesses[k] -= 1;
                    if witnesses[k] == 0 {
                        return false;
                    }
                }
            }
        }
    }
    true
}
