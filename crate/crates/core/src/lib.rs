//! Simulation of a heterogeneous swarm: a legged leader walking with one of
//! two gaits and a group of drones that follow it through virtual
//! mass-spring-damper links, with a potential-field baseline and tracking
//! metrics.
//!
//! - [`kinematics`]: planar two-link leg IK/FK and gait geometry.
//! - [`gait`]: Type 1 (continuous) and Type 2 (sweep-and-push) gait plans.
//! - [`impedance`]: exact zero-order-hold discretization of a link.
//! - [`swarm`]: topologies, controllers and the simulation loop.
//! - [`analysis`]: error, crosstrack and velocity metrics.
//! - [`config`] and [`cli`]: scenario files and the command-line tool.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod gait;
pub mod impedance;
pub mod kinematics;
pub mod numerics;
pub mod swarm;
