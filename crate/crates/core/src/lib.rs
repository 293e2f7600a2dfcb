//! Multi-task actor-critic motion planning for dual-arm reaching with a
//! shared articulated torso, followed by constraint-aware smoothing of the
//! learned joint trajectories.
//!
//! The pipeline: [`environment`] wraps a kinematic simulator
//! ([`kinematics`]) as a reaching task; [`digrad`] trains one compound
//! policy against a multi-head critic built from [`nnet`]; rollouts of the
//! trained policy are smoothed joint by joint in [`smoothing`].

pub mod cli;
pub mod digrad;
pub mod environment;
pub mod kinematics;
pub mod nnet;
pub mod smoothing;

mod error;

pub use error::{Error, Result};
