//! Large-deviation rate functions for the largest eigenvalue of deformed
//! Wigner matrices `X = W/√N + D`, with the free-convolution, matrix Dyson
//! equation and Monte Carlo tooling used to check them.
//!
//! The analytic modules ([`measure`], [`freeconv`], [`rate`], [`mde`]) are
//! generic over the floating-point type through [`Scalar`]; the aliases at the
//! crate root fix it to `f64`. Sampling and Monte Carlo ([`sim`], [`sphint`])
//! work in `f64` only.

// `!(a > b)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod freeconv;
pub mod mde;
pub mod measure;
pub mod numeric;
pub mod output;
pub mod rate;
pub mod scalar;
pub mod sim;
pub mod sphint;
pub mod validate;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Measure = measure::Measure<f64>;
pub type FreeConvolution = freeconv::FreeConvolution<f64>;
pub type RateContext = rate::RateContext<f64>;
pub type RatePoint = rate::RatePoint<f64>;
pub type RateProfile = rate::RateProfile<f64>;
pub type MdeProblem = mde::MdeProblem<f64>;
pub type MdeSolution = mde::MdeSolution<f64>;
