//! Decoders (COMP, DD, exhaustive MAP) and the exact error-probability oracle.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::designs::{apply_tests, TestMatrix, TestResults};
use crate::model::StatusVector;
use crate::priors::PriorVector;
use crate::scalar::Probability;

/// Largest pool the exhaustive routines will enumerate by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("{got} results for {expected} tests")]
    ResultLength { expected: usize, got: usize },
    #[error("pool of {size} exceeds the enumeration cap of {cap}")]
    PoolTooLarge { size: usize, cap: usize },
    #[error("{got} priors for a pool of {expected}")]
    PriorLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub estimate: StatusVector,
    /// Whether each entry was derived rather than assumed.
    pub definite: Vec<bool>,
}

pub trait Decoder {
    fn decode(&self, tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError>;
}

fn check_results(tm: &TestMatrix, y: &TestResults) -> Result<(), DecodeError> {
    if y.len() != tm.num_tests() {
        return Err(DecodeError::ResultLength {
            expected: tm.num_tests(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Members of some negative test.
fn cleared(tm: &TestMatrix, y: &TestResults) -> Vec<bool> {
    let mut cleared = vec![false; tm.pool_size()];
    for (members, &positive) in tm.tests().iter().zip(y.as_slice()) {
        if !positive {
            for &m in members {
                cleared[m] = true;
            }
        }
    }
    cleared
}

/// Everyone not in a negative test is declared infected.
pub fn comp_decode(tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError> {
    check_results(tm, y)?;
    let cleared = cleared(tm, y);
    Ok(DecodeOutcome {
        estimate: StatusVector(cleared.iter().map(|&c| !c).collect()),
        definite: cleared,
    })
}

/// Definite defectives: after COMP elimination, an uncleared item that is the
/// only uncleared member of some positive test is infected; everything else is
/// assumed healthy.
pub fn dd_decode(tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError> {
    check_results(tm, y)?;
    let cleared = cleared(tm, y);
    let mut infected = vec![false; tm.pool_size()];
    for (members, &positive) in tm.tests().iter().zip(y.as_slice()) {
        if !positive {
            continue;
        }
        let mut remaining = members.iter().filter(|&&m| !cleared[m]);
        if let (Some(&only), None) = (remaining.next(), remaining.next()) {
            infected[only] = true;
        }
    }
    let definite = cleared
        .iter()
        .zip(&infected)
        .map(|(&c, &i)| c || i)
        .collect();
    Ok(DecodeOutcome {
        estimate: StatusVector(infected),
        definite,
    })
}

/// Test masks over the enumeration index, where pool position `i` maps to bit
/// `n - 1 - i`. Increasing integers then enumerate status vectors in
/// lexicographic order with position 0 most significant.
fn lexicographic_masks(tm: &TestMatrix) -> Vec<u64> {
    let n = tm.pool_size();
    tm.tests()
        .iter()
        .map(|members| members.iter().fold(0u64, |acc, &m| acc | 1 << (n - 1 - m)))
        .collect()
}

fn unpack(code: u64, n: usize, out: &mut [bool]) {
    for (i, slot) in out.iter_mut().enumerate().take(n) {
        *slot = code >> (n - 1 - i) & 1 == 1;
    }
}

fn check_cap(n: usize, cap: usize) -> Result<(), DecodeError> {
    if n > cap || n >= 64 {
        return Err(DecodeError::PoolTooLarge { size: n, cap });
    }
    Ok(())
}

/// Most probable status vector that explains `y`; ties go to the
/// lexicographically smallest vector (position 0 most significant, 0 < 1).
pub fn map_decode<P: Probability>(
    tm: &TestMatrix,
    y: &TestResults,
    pv: &PriorVector<P>,
    cap: usize,
) -> Result<DecodeOutcome, DecodeError> {
    check_results(tm, y)?;
    let n = tm.pool_size();
    if pv.len() != n {
        return Err(DecodeError::PriorLength {
            expected: n,
            got: pv.len(),
        });
    }
    check_cap(n, cap)?;
    let masks = lexicographic_masks(tm);
    let mut status = vec![false; n];
    let mut best: Option<(u64, P)> = None;
    for code in 0..(1u64 << n) {
        let explains = masks
            .iter()
            .zip(y.as_slice())
            .all(|(&m, &positive)| (m & code != 0) == positive);
        if !explains {
            continue;
        }
        unpack(code, n, &mut status);
        let key = P::mass_key(pv.as_slice(), &status);
        let better = match &best {
            None => true,
            Some((_, incumbent)) => key > *incumbent && !P::keys_tie(&key, incumbent),
        };
        if better {
            best = Some((code, key));
        }
    }
    // Noiseless results always have at least one explanation; an inconsistent
    // `y` falls back to the all-healthy vector.
    let code = best.map_or(0, |(c, _)| c);
    unpack(code, n, &mut status);
    Ok(DecodeOutcome {
        estimate: StatusVector(status),
        definite: vec![true; n],
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Comp;

impl Decoder for Comp {
    fn decode(&self, tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError> {
        comp_decode(tm, y)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Dd;

impl Decoder for Dd {
    fn decode(&self, tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError> {
        dd_decode(tm, y)
    }
}

/// MAP decoding for a fixed prior vector.
#[derive(Debug, Clone)]
pub struct Map<P> {
    pub priors: PriorVector<P>,
    pub cap: usize,
}

impl<P: Probability> Map<P> {
    pub fn new(priors: PriorVector<P>) -> Self {
        Self {
            priors,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl<P: Probability> Decoder for Map<P> {
    fn decode(&self, tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError> {
        map_decode(tm, y, &self.priors, self.cap)
    }
}

/// An arbitrary but fixed map from results to status vectors, derived from a
/// seed: the estimate for `y` is drawn from a ChaCha stream keyed by the seed
/// and the bits of `y`.
#[derive(Debug, Clone, Copy)]
pub struct RandomDecoder {
    pub seed: u64,
}

impl Decoder for RandomDecoder {
    fn decode(&self, tm: &TestMatrix, y: &TestResults) -> Result<DecodeOutcome, DecodeError> {
        check_results(tm, y)?;
        let key = y
            .as_slice()
            .iter()
            .fold(1u64, |acc, &b| acc.wrapping_mul(3).wrapping_add(b as u64));
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(key);
        let n = tm.pool_size();
        Ok(DecodeOutcome {
            estimate: StatusVector((0..n).map(|_| rng.random()).collect()),
            definite: vec![false; n],
        })
    }
}

/// `Σ_u Pr(u; p) 1{decoder(G(u)) ≠ u}` by full enumeration.
pub fn exact_error_probability<P: Probability, D: Decoder + ?Sized>(
    tm: &TestMatrix,
    pv: &PriorVector<P>,
    decoder: &D,
    cap: usize,
) -> Result<P, DecodeError> {
    let n = tm.pool_size();
    if pv.len() != n {
        return Err(DecodeError::PriorLength {
            expected: n,
            got: pv.len(),
        });
    }
    check_cap(n, cap)?;
    let mut cache: HashMap<TestResults, StatusVector> = HashMap::new();
    let mut total = P::zero();
    let mut status = vec![false; n];
    for code in 0..(1u64 << n) {
        unpack(code, n, &mut status);
        let truth = StatusVector(status.clone());
        let y = apply_tests(tm, &truth).expect("truth sized to the pool");
        let estimate = match cache.get(&y) {
            Some(e) => e.clone(),
            None => {
                let e = decoder.decode(tm, &y)?.estimate;
                cache.insert(y, e.clone());
                e
            }
        };
        if estimate != truth {
            total = total + P::mass(pv.as_slice(), &status);
        }
    }
    Ok(total)
}

/// Optimal (MAP) error probability for `(tm, pv)`.
pub fn optimal_error_probability<P: Probability>(
    tm: &TestMatrix,
    pv: &PriorVector<P>,
    cap: usize,
) -> Result<P, DecodeError> {
    let map = Map {
        priors: pv.clone(),
        cap,
    };
    exact_error_probability(tm, pv, &map, cap)
}
