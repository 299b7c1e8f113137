//! Nonadaptive test designs.
//!
//! Random designs are generated column by column: each pool member owns an
//! independent ChaCha stream (the design seed with the member's position as
//! stream id) that yields the tests containing it in increasing order. A
//! [`RandomDesign`] is therefore cheap to hold and can be read lazily, one
//! column prefix at a time, which the minimal-test search relies on; calling
//! [`RandomDesign::materialize`] reads every column to the end and yields the
//! exact same matrix.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::StatusVector;
use crate::priors::PriorVector;
use crate::scalar::Probability;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("test {test} refers to pool position {position} but the pool has {pool} members")]
    MemberOutOfPool {
        test: usize,
        position: usize,
        pool: usize,
    },
    #[error("test {test} lists a member twice or out of order")]
    UnsortedTest { test: usize },
    #[error("truth has {got} entries for a pool of {expected}")]
    TruthLength { expected: usize, got: usize },
    #[error("line {line}: individual {id} is not in the pool")]
    UnknownIndividual { line: usize, id: usize },
    #[error("line {line}: cannot parse {token:?}")]
    Parse { line: usize, token: String },
}

/// A batch of pooled tests. Tests hold *positions* in `pool`, strictly
/// increasing; `pool` maps positions back to individual ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestMatrix {
    pool: Vec<usize>,
    tests: Vec<Vec<usize>>,
}

impl TestMatrix {
    pub fn new(pool: Vec<usize>, tests: Vec<Vec<usize>>) -> Result<Self, DesignError> {
        for (t, members) in tests.iter().enumerate() {
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DesignError::UnsortedTest { test: t });
            }
            if let Some(&position) = members.last() {
                if position >= pool.len() {
                    return Err(DesignError::MemberOutOfPool {
                        test: t,
                        position,
                        pool: pool.len(),
                    });
                }
            }
        }
        Ok(Self { pool, tests })
    }

    pub fn empty(pool: Vec<usize>) -> Self {
        Self {
            pool,
            tests: Vec::new(),
        }
    }

    pub fn pool(&self) -> &[usize] {
        &self.pool
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn num_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn tests(&self) -> &[Vec<usize>] {
        &self.tests
    }

    pub fn members(&self, test: usize) -> &[usize] {
        &self.tests[test]
    }

    /// Number of tests containing each pool position.
    pub fn column_weights(&self) -> Vec<usize> {
        let mut weights = vec![0; self.pool.len()];
        for members in &self.tests {
            for &m in members {
                weights[m] += 1;
            }
        }
        weights
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.tests.iter().map(Vec::len).collect()
    }

    /// Dense `T x n` 0/1 rows.
    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        self.tests
            .iter()
            .map(|members| {
                let mut row = vec![false; self.pool.len()];
                for &m in members {
                    row[m] = true;
                }
                row
            })
            .collect()
    }

    /// Sparse text form: one line per test, the member *individual ids*
    /// separated by single spaces (an empty line is an empty test).
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::new();
        for members in &self.tests {
            let mut first = true;
            for &m in members {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{}", self.pool[m]).expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`TestMatrix::to_sparse_text`] output against a known pool.
    pub fn from_sparse_text(pool: Vec<usize>, text: &str) -> Result<Self, DesignError> {
        let position: std::collections::HashMap<usize, usize> =
            pool.iter().enumerate().map(|(p, &id)| (id, p)).collect();
        let mut tests = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let mut members = Vec::new();
            for token in line.split_whitespace() {
                let id = usize::from_str(token).map_err(|_| DesignError::Parse {
                    line: line_no + 1,
                    token: token.to_string(),
                })?;
                let p = *position.get(&id).ok_or(DesignError::UnknownIndividual {
                    line: line_no + 1,
                    id,
                })?;
                members.push(p);
            }
            members.sort_unstable();
            tests.push(members);
        }
        Self::new(pool, tests)
    }
}

/// Boolean outcomes, one per test.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TestResults(pub Vec<bool>);

impl TestResults {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Noiseless outcomes: a test is positive iff it holds an infected member.
pub fn apply_tests(tm: &TestMatrix, truth: &StatusVector) -> Result<TestResults, DesignError> {
    if truth.len() != tm.pool_size() {
        return Err(DesignError::TruthLength {
            expected: tm.pool_size(),
            got: truth.len(),
        });
    }
    let u = truth.as_slice();
    Ok(TestResults(
        tm.tests
            .iter()
            .map(|members| members.iter().any(|&m| u[m]))
            .collect(),
    ))
}

/// One individual test per pool member.
pub fn complete_design(pool: &[usize]) -> TestMatrix {
    TestMatrix {
        pool: pool.to_vec(),
        tests: (0..pool.len()).map(|i| vec![i]).collect(),
    }
}

/// A degenerate input a random construction had to work around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignFlag {
    /// The column-weight formula gave 0; every member is placed in one test.
    ColumnWeightClamped,
    /// The reference probability was 0, so the column weight is the whole budget.
    ZeroReference,
    /// The prior vector has no mass; there is nothing to place.
    NoExpectedDefectives,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Designed {
    pub matrix: TestMatrix,
    pub flag: Option<DesignFlag>,
}

/// How CCA-style inclusion probabilities depend on the priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CcaRule {
    /// Less likely items are included more often.
    #[default]
    Weighted,
    /// Every item gets the same mass `min(1/2, 1/k̄)`.
    Uniform,
}

/// A random design that can be read column by column.
#[derive(Debug, Clone, PartialEq)]
pub enum RandomDesign {
    /// Every member lies in exactly `weight` of the `tests` tests, chosen
    /// uniformly without replacement.
    ConstantColumn {
        tests: usize,
        weight: usize,
        seed: u64,
    },
    /// Member `i` lies in each test independently with probability `inclusion[i]`.
    Bernoulli {
        tests: usize,
        inclusion: Vec<f64>,
        seed: u64,
    },
}

impl RandomDesign {
    pub fn num_tests(&self) -> usize {
        match self {
            RandomDesign::ConstantColumn { tests, .. } | RandomDesign::Bernoulli { tests, .. } => {
                *tests
            }
        }
    }

    /// Tests containing pool position `member`, increasing.
    pub fn column(&self, member: usize) -> Column {
        let seed = match self {
            RandomDesign::ConstantColumn { seed, .. } | RandomDesign::Bernoulli { seed, .. } => {
                *seed
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(member as u64);
        match self {
            RandomDesign::ConstantColumn { tests, weight, .. } => Column {
                rng,
                next: 0,
                tests: *tests,
                kind: ColumnKind::Selection {
                    remaining: (*weight).min(*tests),
                },
            },
            RandomDesign::Bernoulli {
                tests, inclusion, ..
            } => {
                let p = inclusion[member].clamp(0.0, 1.0);
                Column {
                    rng,
                    next: 0,
                    tests: *tests,
                    kind: ColumnKind::Geometric {
                        log_miss: (1.0 - p).ln(),
                        p,
                    },
                }
            }
        }
    }

    pub fn materialize(&self, pool: Vec<usize>) -> TestMatrix {
        let mut tests = vec![Vec::new(); self.num_tests()];
        for member in 0..pool.len() {
            for t in self.column(member) {
                tests[t].push(member);
            }
        }
        TestMatrix { pool, tests }
    }
}

#[derive(Debug, Clone)]
enum ColumnKind {
    /// Selection sampling: take position `t` with probability
    /// `remaining / (tests - t)`.
    Selection { remaining: usize },
    /// Gaps between included tests are geometric.
    Geometric { p: f64, log_miss: f64 },
}

/// Iterator over one member's tests.
#[derive(Debug, Clone)]
pub struct Column {
    rng: ChaCha8Rng,
    next: usize,
    tests: usize,
    kind: ColumnKind,
}

impl Iterator for Column {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match &mut self.kind {
            ColumnKind::Selection { remaining } => {
                while *remaining > 0 && self.next < self.tests {
                    let t = self.next;
                    self.next += 1;
                    let left = self.tests - t;
                    if self.rng.random_range(0..left) < *remaining {
                        *remaining -= 1;
                        return Some(t);
                    }
                }
                None
            }
            ColumnKind::Geometric { p, log_miss } => {
                if *p <= 0.0 || self.next >= self.tests {
                    return None;
                }
                let gap = if *p >= 1.0 {
                    0
                } else {
                    // P(gap >= k) = (1 - p)^k
                    let u: f64 = 1.0 - self.rng.random::<f64>();
                    let g = (u.ln() / *log_miss).floor();
                    if g >= (self.tests - self.next) as f64 {
                        self.next = self.tests;
                        return None;
                    }
                    g as usize
                };
                let t = self.next + gap;
                self.next = t + 1;
                Some(t)
            }
        }
    }
}

/// `L = max(1, ⌊T / (n p_ref ln 2)⌋)`, capped at `T`.
pub fn column_weight(tests: usize, pool_size: usize, p_ref: f64) -> (usize, Option<DesignFlag>) {
    if tests == 0 {
        return (0, None);
    }
    if p_ref <= 0.0 || pool_size == 0 {
        return (tests, Some(DesignFlag::ZeroReference));
    }
    let raw = (tests as f64 / (pool_size as f64 * p_ref * std::f64::consts::LN_2)).floor();
    if raw < 1.0 {
        (1, Some(DesignFlag::ColumnWeightClamped))
    } else {
        ((raw as usize).min(tests), None)
    }
}

/// Per-item inclusion probabilities of the CCA-style design, `None` when the
/// priors carry no mass.
///
/// With `k̄ = Σ p_i` and base mass `min(1/2, 1/k̄)`, item `i` gets
/// `min(1/2, base * ln(1/p_i) / ln(1/p_max))` under [`CcaRule::Weighted`].
pub fn cca_inclusion<P: Probability>(pv: &PriorVector<P>, rule: CcaRule) -> Option<Vec<f64>> {
    let k_bar = pv.expected_defectives().as_f64();
    if k_bar <= 0.0 {
        return None;
    }
    let base = (1.0 / k_bar).min(0.5);
    let p_max = pv.max()?.as_f64();
    let ref_log = -p_max.ln();
    Some(
        pv.as_slice()
            .iter()
            .map(|p| match rule {
                CcaRule::Uniform => base,
                CcaRule::Weighted => {
                    let p = p.as_f64();
                    let weight = if p <= 0.0 {
                        f64::INFINITY
                    } else if ref_log <= 0.0 {
                        if p >= 1.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        -p.ln() / ref_log
                    };
                    (base * weight).min(0.5)
                }
            })
            .collect(),
    )
}

/// Constant-column-weight random design keyed to `p_ref` (`p_max` or `p_mean`).
pub fn constant_column_weight_design<R: Rng + ?Sized>(
    tests: usize,
    pool: &[usize],
    p_ref: f64,
    rng: &mut R,
) -> Designed {
    let (weight, flag) = column_weight(tests, pool.len(), p_ref);
    let design = RandomDesign::ConstantColumn {
        tests,
        weight,
        seed: rng.random(),
    };
    Designed {
        matrix: design.materialize(pool.to_vec()),
        flag,
    }
}

/// CCA-style Bernoulli design: lower-prior items land in more tests.
pub fn cca_design<P: Probability, R: Rng + ?Sized>(
    tests: usize,
    pool: &[usize],
    pv: &PriorVector<P>,
    rule: CcaRule,
    rng: &mut R,
) -> Designed {
    assert_eq!(pool.len(), pv.len(), "one prior per pool member");
    match cca_inclusion(pv, rule) {
        None => Designed {
            matrix: TestMatrix::empty(pool.to_vec()),
            flag: Some(DesignFlag::NoExpectedDefectives),
        },
        Some(inclusion) => {
            let design = RandomDesign::Bernoulli {
                tests,
                inclusion,
                seed: rng.random(),
            };
            Designed {
                matrix: design.materialize(pool.to_vec()),
                flag: None,
            }
        }
    }
}
