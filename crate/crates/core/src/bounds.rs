//! Lower bounds and test budgets.

use num_traits::{Float, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::priors::PriorVector;
use crate::scalar::Probability;

/// Logarithm used inside the `log N` factors of the budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Binary,
}

impl LogBase {
    pub fn log<F: Float>(self, x: F) -> F {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Binary => x.log2(),
        }
    }
}

/// `12e`, the multiplier that gives error probability below `2 N^-2`.
pub const HEURISTIC_MULTIPLIER: f64 = 12.0 * std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub delta: f64,
    pub heuristic_multiplier: f64,
    pub log_base: LogBase,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            delta: 2.0,
            heuristic_multiplier: HEURISTIC_MULTIPLIER,
            log_base: LogBase::Natural,
        }
    }
}

impl BoundParams {
    pub fn cca_budget(&self, n: usize, expected_defectives: f64) -> usize {
        cca_budget_with(n, expected_defectives, self.delta, self.log_base)
    }

    pub fn heuristic_budget(&self, n: usize, p_mean: f64) -> usize {
        heuristic_budget_with(n, p_mean, self.heuristic_multiplier, self.log_base)
    }
}

/// Binary entropy in bits, with `h2(0) = h2(1) = 0`.
pub fn binary_entropy<F: Float>(p: F) -> F {
    if p <= F::zero() || p >= F::one() {
        return F::zero();
    }
    let q = F::one() - p;
    -(p * p.log2() + q * q.log2())
}

/// `Σ h2(p_i)`: tests any nonadaptive scheme needs for vanishing error.
pub fn entropy_lower_bound<F: Float + Probability>(pv: &PriorVector<F>) -> F {
    pv.as_slice()
        .iter()
        .fold(F::zero(), |acc, &p| acc + binary_entropy(p))
}

/// Raw `min{n, n p_min log n}`; the hidden constant is not applied.
pub fn min_prior_lower_bound<F: Float>(n: usize, p_min: F) -> F {
    min_prior_lower_bound_with(n, p_min, LogBase::Natural)
}

pub fn min_prior_lower_bound_with<F: Float>(n: usize, p_min: F, log: LogBase) -> F {
    let n_f = F::from(n).expect("population fits the scalar");
    if n == 0 {
        return F::zero();
    }
    n_f.min(n_f * p_min * log.log(n_f))
}

/// `⌈4e(1 + δ) k̄ ln n⌉`.
pub fn cca_budget(n: usize, expected_defectives: f64, delta: f64) -> usize {
    cca_budget_with(n, expected_defectives, delta, LogBase::Natural)
}

pub fn cca_budget_with(n: usize, expected_defectives: f64, delta: f64, log: LogBase) -> usize {
    let raw = 4.0 * std::f64::consts::E * (1.0 + delta) * expected_defectives * log.log(n as f64);
    ceil_to_usize(raw)
}

/// `min{⌈12e n p̄ ln n⌉, n}`; `n` itself when `n <= 1`.
pub fn heuristic_budget(n: usize, p_mean: f64) -> usize {
    heuristic_budget_with(n, p_mean, HEURISTIC_MULTIPLIER, LogBase::Natural)
}

pub fn heuristic_budget_with(n: usize, p_mean: f64, multiplier: f64, log: LogBase) -> usize {
    if n <= 1 {
        return n;
    }
    let raw = multiplier * n as f64 * p_mean * log.log(n as f64);
    ceil_to_usize(raw).min(n)
}

fn ceil_to_usize(x: f64) -> usize {
    if x <= 0.0 || x.is_nan() {
        0
    } else {
        x.ceil().to_usize().unwrap_or(usize::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0_f64), 0.0);
        assert_eq!(binary_entropy(1.0_f64), 0.0);
        assert!((binary_entropy(0.5_f64) - 1.0).abs() < 1e-15);
        for p in [0.01, 0.1, 0.27, 0.4] {
            assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() < 1e-12);
        }
        let zeros = PriorVector::uniform(50, 0.0_f64);
        assert_eq!(entropy_lower_bound(&zeros), 0.0);
        let day0 = PriorVector::uniform(1000, 0.02_f64);
        assert!((entropy_lower_bound(&day0) - 141.440542541821).abs() < 1e-9);
        let day0_f32 = PriorVector::uniform(1000, 0.02_f32);
        assert!((entropy_lower_bound(&day0_f32) - 141.4405).abs() < 1e-2);
    }

    #[test]
    fn min_prior_bound_values() {
        // 1 / ln 1000 ≈ 0.1448
        assert_eq!(min_prior_lower_bound(1000, 0.2_f64), 1000.0);
        let v = min_prior_lower_bound(1000, 0.02_f64);
        assert!((v - 138.15510557964274).abs() < 1e-9);
        let mut last = 0.0;
        for k in 1..=50 {
            let v = min_prior_lower_bound(1000, k as f64 / 100.0);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn cca_budget_values() {
        assert_eq!(cca_budget(3, 1.0, 0.0), 12); // ln 3 > 1
        let e_budget = 4.0 * std::f64::consts::E * std::f64::consts::E.ln();
        assert_eq!(ceil_to_usize(e_budget), 11);
        // 4e * 2 * 20 * ln 1000 = 3004.356...
        assert_eq!(cca_budget(1000, 20.0, 1.0), 3005);
        let entropy = entropy_lower_bound(&PriorVector::uniform(1000, 0.02_f64));
        assert!(cca_budget(1000, 20.0, 1.0) as f64 > entropy);
    }

    #[test]
    fn heuristic_budget_values() {
        assert_eq!(heuristic_budget(1000, 0.0), 0);
        assert_eq!(heuristic_budget(1000, 0.02), 1000);
        assert_eq!(heuristic_budget(1, 0.3), 1);
        assert_eq!(heuristic_budget(0, 0.3), 0);
        // 12e * 1000 * 0.001 * ln 1000 = 225.3
        assert_eq!(heuristic_budget(1000, 0.001), 226);
        assert_eq!(
            heuristic_budget_with(1000, 0.001, HEURISTIC_MULTIPLIER, LogBase::Binary),
            326
        );
    }

    proptest! {
        #[test]
        fn heuristic_budget_is_capped(n in 0usize..5000, p in 0.0f64..1.0) {
            prop_assert!(heuristic_budget(n, p) <= n);
        }

        #[test]
        fn entropy_is_additive_and_permutation_invariant(
            a in proptest::collection::vec(0.0f64..=1.0, 0..30),
            b in proptest::collection::vec(0.0f64..=1.0, 0..30),
        ) {
            let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
            let mut reversed = joined.clone();
            reversed.reverse();
            let ea = entropy_lower_bound(&PriorVector::new(a).unwrap());
            let eb = entropy_lower_bound(&PriorVector::new(b).unwrap());
            let ej = entropy_lower_bound(&PriorVector::new(joined).unwrap());
            let er = entropy_lower_bound(&PriorVector::new(reversed).unwrap());
            prop_assert!((ea + eb - ej).abs() < 1e-9);
            prop_assert!((ej - er).abs() < 1e-9);
        }

        #[test]
        fn entropy_dominates_uniform_minimum(p in proptest::collection::vec(0.0f64..=0.5, 1..40)) {
            let pv = PriorVector::new(p).unwrap();
            let n = pv.len() as f64;
            let lower = n * binary_entropy(pv.min().unwrap());
            prop_assert!(entropy_lower_bound(&pv) >= lower - 1e-9);
        }
    }
}
