//! Scalar abstraction for probabilities.
//!
//! The static group-testing machinery (priors, MAP ranking, exact error
//! probabilities) only needs ring operations and an ordering, so it is written
//! against [`Probability`]. That lets the same code run on `f32`/`f64` and on
//! exact rationals, which the exhaustive oracle suites use to avoid any
//! floating-point tie ambiguity. Anything that needs logarithms (entropy,
//! budgets) is bounded on [`num_traits::Float`] instead.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A probability-valued scalar.
pub trait Probability:
    Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
    /// A key that is strictly monotone in `Pr(u; p) = prod p_i^u_i (1 - p_i)^(1 - u_i)`.
    ///
    /// Floats return the log-mass, exact types the mass itself.
    fn mass_key(priors: &[Self], status: &[bool]) -> Self;

    /// Whether two keys produced by [`Probability::mass_key`] count as equal.
    fn keys_tie(a: &Self, b: &Self) -> bool;

    /// `Pr(u; p)` itself.
    fn mass(priors: &[Self], status: &[bool]) -> Self {
        priors.iter().zip(status).fold(Self::one(), |acc, (p, &u)| {
            if u {
                acc * p.clone()
            } else {
                acc * (Self::one() - p.clone())
            }
        })
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Absolute tolerance on log-masses below which two MAP candidates tie.
pub const LOG_TIE_TOLERANCE: f64 = 1e-12;

macro_rules! float_probability {
    ($t:ty, $tol:expr) => {
        impl Probability for $t {
            fn mass_key(priors: &[Self], status: &[bool]) -> Self {
                priors
                    .iter()
                    .zip(status)
                    .map(|(&p, &u)| if u { p.ln() } else { (1.0 - p).ln() })
                    .sum()
            }

            fn keys_tie(a: &Self, b: &Self) -> bool {
                a == b || (a - b).abs() <= $tol
            }
        }
    };
}

float_probability!(f64, LOG_TIE_TOLERANCE);
float_probability!(f32, 1e-6);

impl Probability for BigRational {
    fn mass_key(priors: &[Self], status: &[bool]) -> Self {
        Self::mass(priors, status)
    }

    fn keys_tie(a: &Self, b: &Self) -> bool {
        a == b
    }
}

/// Exact rational `numer / denom`.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Converts between probability scalars through `f64`.
pub fn cast<A: Probability, B: Probability>(x: &A) -> B {
    B::from_f64(x.as_f64()).unwrap_or_else(B::zero)
}
