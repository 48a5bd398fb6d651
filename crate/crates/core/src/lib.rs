//! Adaptive filters derived as approximate Bayesian (Kalman) recursions in a
//! random-walk state-space model with generalized-Gaussian measurement noise.
//!
//! One recursion covers the whole family. The covariance of the state estimate
//! is either kept in full ([`Variant::Kf`]), as a diagonal ([`Variant::Vkf`]),
//! as a single shared variance ([`Variant::Skf`]), or frozen ([`Variant::Fkf`]);
//! the stochastic-gradient limit ([`Variant::Sg`]) drops it altogether. With a
//! Gaussian noise model (`beta = 2`) the family reduces to the Kalman filter,
//! the broadband Kalman filter, regularized NLMS and LMS. With Laplacian noise
//! (`beta = 1`) it yields the sign-error family.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the experiment driver live in the `bayesaf` companion crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod filters;
pub(crate) mod linalg;
pub mod noise;
pub mod simulate;
pub mod tune;

pub use error::{Error, Result};
pub use filters::{
    gain_multiplier, init_state, posterior_objective, predict, reference_update, step,
    CovarianceRepr, FilterConfig, FilterState, Prediction, ReferenceForm, StepRecord, Variant,
};
pub use noise::{kappa, NoiseModel};
pub use simulate::{Scenario, Trajectory};
pub use tune::{GridPoint, Knob, TuneResult, TuneSpec};
