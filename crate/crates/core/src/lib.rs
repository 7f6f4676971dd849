//! Quantum-trajectory simulation of a monitored free-fermion chain with
//! feedback and a Wannier-Stark tilt.
//!
//! The state of every trajectory is a Slater determinant, so one step costs
//! `O(L² N)` instead of the `2^L` of a full many-body simulation. The crate
//! provides the single-particle model ([`model`]), the Gaussian state
//! ([`state`]), the jump integrator ([`trajectory`]), observables
//! ([`observables`]), a parallel ensemble runner ([`ensemble`]), size-scaling
//! analysis ([`scaling`]) and an exact Fock-space reference ([`fock`]) for
//! small chains.

// `!(x > y)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod io;
pub mod model;
pub mod observables;
pub mod scaling;
pub mod spectrum;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{BoundaryCondition, FeedbackVariant, InitialState, ModelParams};
pub use observables::{Observable, ObservableSet};
pub use state::SlaterState;
pub use trajectory::{Engine, TrajectorySchedule};
