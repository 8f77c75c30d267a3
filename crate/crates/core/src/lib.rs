//! Sensor-attack detection and resilient state estimation for uniformly
//! observable nonlinear plants with redundant sensors.
//!
//! Each sensor drives a high-gain partial observer of its observable
//! coordinates. Stacked estimates of sensor subsets are checked for
//! consistency through Lipschitz-extended left inverses, and a switching rule
//! picks an attack-free subset to reconstruct the state from.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common double-precision case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod detection;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod inversion;
pub mod linalg;
pub mod model;
pub mod observer;
pub mod ode;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type PlantModel64 = model::PlantModel<f64>;
pub type PlantModel32 = model::PlantModel<f32>;
pub type ObserverBank64 = observer::ObserverBank<f64>;
pub type ObserverBank32 = observer::ObserverBank<f32>;
pub type InverseSet64 = inversion::InverseSet<f64>;
pub type InverseSet32 = inversion::InverseSet<f32>;
pub type Simulation64 = harness::Simulation<f64>;
pub type Simulation32 = harness::Simulation<f32>;
