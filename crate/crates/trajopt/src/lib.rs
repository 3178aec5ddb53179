//! Trajectory optimization for force-controlled point masses, built around
//! three planners: the cross-entropy method, pure gradient ascent through the
//! differentiable dynamics, and a hybrid that refines every sampled plan with
//! gradient steps inside each cross-entropy iteration.
//!
//! The crate also ships the benchmark harness used to compare the planners:
//! seeded dimensionality and obstacle-count sweeps, paired significance
//! tests, and a finite-difference gradient check for the environment's
//! analytic adjoint.
//!
//! Everything is deterministic: all randomness flows from one seed through
//! keyed substreams ([`rng::RngStream`]), and results are independent of the
//! parallel schedule.

pub mod bench;
pub mod env;
pub mod error;
pub mod mpc;
pub mod planners;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
