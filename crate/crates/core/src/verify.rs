//! Executable checks of the static optimality results and of the prior-vector
//! properties of the epidemic model.
//!
//! The static suites enumerate every status vector of small random instances
//! and compare exact error probabilities in rational arithmetic, so a single
//! violation is a genuine counterexample and not roundoff.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decoders::{
    comp_decode, dd_decode, exact_error_probability, map_decode, optimal_error_probability, Comp,
    Dd, RandomDecoder,
};
use crate::designs::{apply_tests, TestMatrix};
use crate::model::{ModelParams, StatusVector};
use crate::pipeline::{run_trajectory, Experiment, PipelineError, Policy, Strategy};
use crate::priors::PriorVector;
use crate::rng::{derive_seed, lane};
use crate::scalar::ratio;
use crate::BigRational;

/// Outcome of one property suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// The first few counterexamples, for diagnosis.
    pub examples: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            violations: 0,
            examples: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < 5 {
                self.examples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.violations == 0
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {} cases, {} violations",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.violations
        )
    }
}

/// Shape of the random static instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    pub instances: usize,
    pub max_items: usize,
    pub max_tests: usize,
    /// Priors are `k / prior_denominator` for `k` in `1..=prior_denominator / 2`.
    pub prior_denominator: i64,
    pub random_decoders: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            max_items: 6,
            max_tests: 6,
            prior_denominator: 64,
            random_decoders: 100,
            seed: 2024,
        }
    }
}

/// A random design with priors in `(0, 1/2]`.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub matrix: TestMatrix,
    pub priors: PriorVector<BigRational>,
    pub seed: u64,
}

impl std::fmt::Display for OracleInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p: Vec<String> = self
            .priors
            .as_slice()
            .iter()
            .map(|x| x.to_string())
            .collect();
        write!(
            f,
            "tests {:?}, priors [{}]",
            self.matrix.tests(),
            p.join(", ")
        )
    }
}

pub fn oracle_instances(cfg: &OracleConfig) -> Vec<OracleInstance> {
    (0..cfg.instances)
        .map(|k| {
            let seed = derive_seed(cfg.seed, lane::ORACLE, k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..=cfg.max_items);
            let t = rng.random_range(1..=cfg.max_tests);
            let tests = (0..t)
                .map(|_| (0..n).filter(|_| rng.random_bool(0.5)).collect())
                .collect();
            let top = cfg.prior_denominator / 2;
            let priors = (0..n)
                .map(|_| ratio(rng.random_range(1..=top), cfg.prior_denominator))
                .collect();
            OracleInstance {
                matrix: TestMatrix::new((0..n).collect(), tests).expect("sorted, in-pool tests"),
                priors: PriorVector::new(priors).expect("priors in (0, 1/2]"),
                seed,
            }
        })
        .collect()
}

fn status_of(code: usize, n: usize) -> StatusVector {
    StatusVector((0..n).map(|i| code >> i & 1 == 1).collect())
}

/// MAP's error probability is no larger than that of COMP, DD, or any of the
/// random decoders.
pub fn map_optimality(instances: &[OracleInstance], random_decoders: usize) -> SuiteReport {
    let mut report = SuiteReport::new("map_optimality");
    let cap = usize::MAX;
    for inst in instances {
        let best = optimal_error_probability(&inst.matrix, &inst.priors, cap).expect("small pool");
        let comp =
            exact_error_probability(&inst.matrix, &inst.priors, &Comp, cap).expect("small pool");
        let dd = exact_error_probability(&inst.matrix, &inst.priors, &Dd, cap).expect("small pool");
        report.check(best <= comp, || format!("COMP {comp} < MAP {best}: {inst}"));
        report.check(best <= dd, || format!("DD {dd} < MAP {best}: {inst}"));
        for k in 0..random_decoders {
            let decoder = RandomDecoder {
                seed: derive_seed(inst.seed, lane::DESIGN, k as u64),
            };
            let err = exact_error_probability(&inst.matrix, &inst.priors, &decoder, cap)
                .expect("small pool");
            report.check(best <= err, || {
                format!("random decoder {k} {err} < MAP {best}: {inst}")
            });
        }
    }
    report
}

/// If MAP misses defective set `D`, it also misses `D ∪ {j}` for every
/// `j ∉ D` (all priors at most 1/2).
pub fn error_monotonicity(instances: &[OracleInstance]) -> SuiteReport {
    let mut report = SuiteReport::new("error_monotonicity");
    for inst in instances {
        let n = inst.matrix.pool_size();
        let errs: Vec<bool> = (0..1usize << n)
            .map(|code| {
                let truth = status_of(code, n);
                let y = apply_tests(&inst.matrix, &truth).expect("truth sized to the pool");
                map_decode(&inst.matrix, &y, &inst.priors, usize::MAX)
                    .expect("small pool")
                    .estimate
                    != truth
            })
            .collect();
        for code in 0..1usize << n {
            if !errs[code] {
                continue;
            }
            for j in (0..n).filter(|j| code >> j & 1 == 0) {
                let bigger = code | 1 << j;
                report.check(errs[bigger], || {
                    format!("MAP errs on {code:#b} but not after adding {j}: {inst}")
                });
            }
        }
    }
    report
}

/// Lowering one prior entry never raises the optimal error probability.
pub fn prior_monotonicity(instances: &[OracleInstance], denominator: i64) -> SuiteReport {
    let mut report = SuiteReport::new("prior_monotonicity");
    for inst in instances {
        let base =
            optimal_error_probability(&inst.matrix, &inst.priors, usize::MAX).expect("small pool");
        let mut rng = ChaCha8Rng::seed_from_u64(inst.seed);
        for j in 0..inst.priors.len() {
            let current = &inst.priors.as_slice()[j];
            let top = (current * BigRational::from_integer(denominator.into()))
                .floor()
                .to_integer();
            let top: i64 = top.try_into().expect("small numerator");
            // Strictly lower, and the limit value 0.
            let lowered = [
                ratio(rng.random_range(0..top.max(1)), denominator),
                BigRational::zero(),
            ];
            for p in lowered {
                if p > *current {
                    continue;
                }
                let pv = inst.priors.with_entry(j, p.clone());
                let err =
                    optimal_error_probability(&inst.matrix, &pv, usize::MAX).expect("small pool");
                report.check(err <= base, || {
                    format!("p_{j} -> {p}: {err} > {base}: {inst}")
                });
            }
        }
    }
    report
}

/// `P*(G, p_max 1) >= P*(G, p) >= P*(G, p_min 1)`.
pub fn extreme_prior_ordering(instances: &[OracleInstance]) -> SuiteReport {
    let mut report = SuiteReport::new("extreme_prior_ordering");
    for inst in instances {
        let n = inst.priors.len();
        let lo = PriorVector::uniform(n, inst.priors.min().expect("nonempty"));
        let hi = PriorVector::uniform(n, inst.priors.max().expect("nonempty"));
        let at = |pv: &PriorVector<BigRational>| {
            optimal_error_probability(&inst.matrix, pv, usize::MAX).expect("small pool")
        };
        let (e_lo, e, e_hi) = (at(&lo), at(&inst.priors), at(&hi));
        report.check(e_lo <= e && e <= e_hi, || {
            format!("{e_lo} <= {e} <= {e_hi} fails: {inst}")
        });
    }
    report
}

/// All four static suites on one shared set of instances.
pub fn static_oracle_suite(cfg: &OracleConfig) -> Vec<SuiteReport> {
    let instances = oracle_instances(cfg);
    vec![
        map_optimality(&instances, cfg.random_decoders),
        error_monotonicity(&instances),
        prior_monotonicity(&instances, cfg.prior_denominator),
        extreme_prior_ordering(&instances),
    ]
}

/// COMP never misses and DD never falsely accuses, checked over every truth
/// of every instance.
pub fn decoder_one_sidedness(instances: &[OracleInstance]) -> SuiteReport {
    let mut report = SuiteReport::new("decoder_one_sidedness");
    for inst in instances {
        let n = inst.matrix.pool_size();
        for code in 0..1usize << n {
            let truth = status_of(code, n);
            let y = apply_tests(&inst.matrix, &truth).expect("truth sized to the pool");
            let comp = comp_decode(&inst.matrix, &y)
                .expect("lengths match")
                .estimate;
            let dd = dd_decode(&inst.matrix, &y).expect("lengths match").estimate;
            let ok = (0..n).all(|i| (!truth.0[i] || comp.0[i]) && (truth.0[i] || !dd.0[i]));
            report.check(ok, || format!("truth {code:#b}: {inst}"));
        }
    }
    report
}

/// Checks `f` is monotone along `grid`; `increasing` chooses the direction.
fn monotone_on(
    report: &mut SuiteReport,
    grid: &[f64],
    f: impl Fn(f64) -> f64,
    increasing: bool,
    tol: f64,
    label: impl Fn() -> String,
) {
    for w in grid.windows(2) {
        let (a, b) = (f(w[0]), f(w[1]));
        let ok = if increasing {
            b >= a - tol
        } else {
            b <= a + tol
        };
        report.check(ok, || {
            format!("{} at x = {} -> {}: {a} vs {b}", label(), w[0], w[1])
        });
    }
}

fn grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step).round() as usize;
    (0..=count).map(|k| from + k as f64 * step).collect()
}

/// `(1 - κx)/(1 - x)` increasing on `(0, 1)` for `κ ∈ (0, 1)`;
/// `(1 - q)^x` decreasing for `q ∈ (0, 1)`;
/// `(1 - (1 - q1)^x)/(1 - (1 - q2)^x)` non-increasing on `x >= 1` for `q1 >= q2`.
pub fn auxiliary_monotonicity(step: f64, tol: f64) -> Vec<SuiteReport> {
    let unit = grid(step, 1.0 - step, step);

    let mut f1 = SuiteReport::new("f1_increasing");
    for &kappa in &unit {
        monotone_on(
            &mut f1,
            &unit,
            |x| (1.0 - kappa * x) / (1.0 - x),
            true,
            tol,
            || format!("kappa = {kappa}"),
        );
    }

    let mut f2 = SuiteReport::new("f2_decreasing");
    let exponents = grid(0.0, 50.0, step);
    for &q in &unit {
        monotone_on(
            &mut f2,
            &exponents,
            |x| (1.0 - q).powf(x),
            false,
            tol,
            || format!("q2 = {q}"),
        );
    }

    let mut f3 = SuiteReport::new("f3_non_increasing");
    let xs = grid(1.0, 50.0, step);
    // 1 - (1 - q)^x without cancellation for small q.
    let hit = |q: f64, x: f64| -(x * (-q).ln_1p()).exp_m1();
    let mut rates: Vec<f64> = grid(0.05, 0.95, 0.05);
    let s = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    rates.extend([0.0004, 8e-5, 0.012, 0.03, s / 20.0, s / 1000.0, 1e-3, 1e-2]);
    for &q1 in &rates {
        for &q2 in rates.iter().filter(|&&q2| q2 <= q1) {
            monotone_on(
                &mut f3,
                &xs,
                |x| hit(q1, x) / hit(q2, x),
                false,
                tol,
                || format!("q1 = {q1}, q2 = {q2}"),
            );
        }
    }
    vec![f1, f2, f3]
}

/// Rates under which every daily prior stays at most 1/2.
pub fn half_bounded_params() -> ModelParams {
    let s = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    ModelParams::new(1000, 20, 0.5, s / 20.0, s / 1000.0)
}

/// Simulates complete testing and checks every daily prior vector: entries at
/// most 1/2 and `p_max / p_min <= q1 / q2` whenever `p_min > 0`. The ratio is
/// attained exactly when some community has no infections, so it gets a
/// relative slack of `1e-12`.
pub fn prior_shape_suite(
    params: &ModelParams,
    trajectories: usize,
    horizon: u32,
    seed: u64,
) -> Result<Vec<SuiteReport>, PipelineError> {
    let policy = Policy::new(Strategy::Complete, Experiment::MinTestsSearch);
    let limit = params.q1 / params.q2;
    let mut half = SuiteReport::new("priors_at_most_half");
    let mut spread = SuiteReport::new("prior_ratio_within_rates");
    for k in 0..trajectories {
        let records = run_trajectory(params, &policy, horizon, derive_seed(seed, 0, k as u64))?;
        for r in records {
            half.check(r.p_max <= 0.5, || {
                format!("trajectory {k} day {}: p_max = {}", r.day, r.p_max)
            });
            if r.p_min > 0.0 {
                let observed = r.p_max / r.p_min;
                spread.check(observed <= limit * (1.0 + 1e-12), || {
                    format!("trajectory {k} day {}: ratio {observed} > {limit}", r.day)
                });
            }
        }
    }
    Ok(vec![half, spread])
}

/// Exact `1 - Pr(all healthy)` for a rational prior vector, a sanity anchor
/// for the enumeration code.
pub fn any_defective_probability(pv: &PriorVector<BigRational>) -> BigRational {
    BigRational::one()
        - pv.as_slice()
            .iter()
            .fold(BigRational::one(), |acc, p| acc * (BigRational::one() - p))
}
