//! Synchronous bounded-confidence (Hegselmann-Krause) opinion dynamics:
//! exact and floating-point trajectories, profile-graph predicates,
//! closed-form consensus bounds and seeded Monte Carlo estimates.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod opinion;
pub mod profile;
pub mod rng;
pub mod scalar;
pub mod sweep;

pub use bounds::{BoundName, BoundValue};
pub use dynamics::{run_trajectory, Outcome, RunParams, TrajectoryResult};
pub use error::{Error, Result};
pub use estimator::{estimate, DynamicsParams, Event, McEstimate, McRequest};
pub use opinion::{neighbors, update_step, Configuration, NeighborSet};
pub use profile::{build_profile, is_connected, Profile};
pub use scalar::{Scalar, ScalarMode};
