//! Leader-follower swarm: link topologies, the impedance and potential-field
//! controllers, and the fixed-step simulation loop.
//!
//! Followers are kinematic. Under impedance control each follower carries a
//! lag state `slot - actual` (relative to the leader) driven by the forces of
//! its incident links; under the potential-field baseline followers integrate
//! a clamped velocity command.

mod controller;
mod log;
mod sim;
mod topology;

use thiserror::Error;

use crate::gait::GaitError;
use crate::impedance::ImpedanceError;

pub use controller::{
    apf_controller_step, apf_velocity, follower_from_lag, impedance_controller_step,
    lag_from_follower, link_forces, AgentState, ApfParams, CouplingGains, MIN_DISTANCE,
};
pub use log::{LogError, Sample, TrajectoryLog, TRAJECTORY_CSV_HEADER};
pub use sim::{
    default_offsets, run_simulation, Controller, Disturbance, LeaderSource, LeaderTrack, PathShape,
    ScriptedPath, SimConfig,
};
pub use topology::{build_topology, Link, TopologyGraph, TopologyKind, LEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwarmError {
    #[error("invalid follower count {n} for a {kind} topology: {reason}")]
    InvalidCount {
        kind: TopologyKind,
        n: usize,
        reason: &'static str,
    },
    #[error("expected {expected} formation offsets, got {got}")]
    OffsetMismatch { expected: usize, got: usize },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("simulation diverged at tick {tick} (agent {agent}): {detail}")]
    Divergence {
        tick: usize,
        agent: usize,
        detail: String,
    },
    #[error(transparent)]
    Impedance(#[from] ImpedanceError),
    #[error("leader gait: {0}")]
    Gait(#[from] GaitError),
}
