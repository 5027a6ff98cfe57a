//! Simulation and verification toolkit for evolution equations with a
//! delayed feedback term
//!
//! ```text
//!     U'(t) = A U(t) + F(U(t)) + k * B U(t - tau)
//! ```
//!
//! The crate has three layers that deliberately do not trust each other:
//!
//! * [`certificates`] turns exponential-stability constants of the undelayed
//!   dynamics into closed-form gain thresholds, decay rates, and explicit
//!   trajectory envelopes.
//! * [`solver`] integrates the delayed system by the method of steps, with an
//!   independent variation-of-constants oracle for cross-checking.
//! * [`diagnostics`] estimates the constants the certificates consume from
//!   the matrices themselves and verifies simulated trajectories against the
//!   certified envelopes sample by sample.
//!
//! [`models`] builds finite-difference discretizations of damped wave
//! systems with interior, boundary, and interface delayed feedback, which is
//! where the three layers meet in the integration tests.
//!
//! Everything is generic over the scalar type through the [`scalar::Scalar`]
//! trait; `f64` aliases for the main types live at the crate root.
//!
//! ```
//! use delaykit::certificates::bounded_certificate;
//! use delaykit::history::History;
//! use delaykit::solver::{solve_method_of_steps, SolverConfig};
//! use delaykit::system::DelaySystem;
//! use nalgebra::{DMatrix, DVector};
//!
//! // U'(t) = -U(t) + 0.5 U(t - ln 2) with unit history: U(tau) = 0.75.
//! let tau = std::f64::consts::LN_2;
//! let system = DelaySystem {
//!     a: DMatrix::from_element(1, 1, -1.0),
//!     output_map: DMatrix::identity(1, 1),
//!     input_map: DMatrix::identity(1, 1),
//!     output_weights: DVector::from_element(1, 1.0),
//!     k: 0.5,
//!     tau,
//!     nonlinearity: None,
//!     gram: None,
//!     velocity_split: None,
//!     labels: Default::default(),
//! };
//! let m = 256;
//! let history = History::constant(tau, m, DVector::from_element(1, 1.0))?;
//! let config = SolverConfig::new(tau / m as f64, tau);
//! let trajectory = solve_method_of_steps(
//!     &system, &DVector::from_element(1, 1.0), &history, &config)?;
//! assert!((trajectory.states.last().unwrap()[0] - 0.75).abs() < 1e-6);
//!
//! // The gain sits inside the certified threshold, with decay rate to spare.
//! let cert = bounded_certificate(1.0, 1.0, tau, 1.0, system.k)?;
//! assert!(cert.stable && cert.omega_prime > 0.2);
//! # Ok::<(), delaykit::Error>(())
//! ```

// Validation guards are written as `!(x > 0)` on purpose: the negated form
// rejects NaN along with the out-of-range values, `x <= 0` would let it pass.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod error;
pub mod history;
pub mod linalg;
pub mod scalar;
pub mod system;
pub mod trajectory;
mod wire;

pub mod diagnostics;
pub mod models;
pub mod solver;

pub use error::{Error, Result};

/// Delayed system with `f64` coefficients.
pub type DelaySystem64 = system::DelaySystem<f64>;
/// History segment with `f64` samples.
pub type History64 = history::History<f64>;
/// Recorded trajectory with `f64` samples.
pub type Trajectory64 = trajectory::Trajectory<f64>;
/// Stability certificate with `f64` constants.
pub type StabilityCertificate64 = certificates::StabilityCertificate<f64>;
/// Semigroup constant estimate with `f64` entries.
pub type SemigroupEstimate64 = certificates::SemigroupEstimate<f64>;
