//! Dynamic group testing on a discrete-time SIR stochastic block model.
//!
//! Each day the tester pools samples from everyone not in isolation, decodes
//! the results the next morning, and isolates whoever is found infected. The
//! crate covers the epidemic model ([`model`]), the tester's daily priors
//! ([`priors`]), nonadaptive designs ([`designs`]) and decoders
//! ([`decoders`]), bounds on the number of tests ([`bounds`]), the daily
//! pipeline and Monte Carlo harness ([`pipeline`]), and executable checks of
//! the static-testing and prior-boundedness results ([`verify`]).
//!
//! The static machinery is generic over the probability scalar (see
//! [`scalar::Probability`]); the aliases below fix the common choices.

pub mod bounds;
pub mod decoders;
pub mod designs;
pub mod model;
pub mod pipeline;
pub mod priors;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use num_rational::BigRational;

pub use designs::{TestMatrix, TestResults};
pub use model::{HealthState, ModelParams, PopulationState, StatusVector};

/// Prior vector over `f64`, used by the simulator.
pub type PriorVector = priors::PriorVector<f64>;
/// Prior vector over `f32`.
pub type PriorVectorF32 = priors::PriorVector<f32>;
/// Prior vector over exact rationals, used by the exhaustive oracles.
pub type ExactPriorVector = priors::PriorVector<BigRational>;
/// MAP decoder over `f64` priors.
pub type MapDecoder = decoders::Map<f64>;
/// MAP decoder over exact priors.
pub type ExactMapDecoder = decoders::Map<BigRational>;
