use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::controller::{
    apf_controller_step, follower_from_lag, impedance_controller_step, lag_from_follower,
    AgentState, ApfParams, CouplingGains,
};
use super::log::{Sample, TrajectoryLog};
use super::topology::{build_topology, TopologyGraph, TopologyKind, LEADER};
use super::SwarmError;
use crate::gait::{type1_plan, type2_plan, GaitParams, GaitPlan, GaitType};
use crate::impedance::{discretize, ImpedanceParams, LinkState};
use crate::kinematics::LegGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathShape {
    /// Counter-clockwise square starting along +x.
    Square,
    /// Straight segment along +x.
    Line,
    Stationary,
}

/// Constant-speed polyline with holds at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedPath {
    pub shape: PathShape,
    /// Side or segment length, m.
    pub length: f64,
    /// m/s.
    pub speed: f64,
    pub start_hold: f64,
    pub end_hold: f64,
}

impl ScriptedPath {
    pub fn waypoints(&self) -> Vec<Vector3<f64>> {
        let l = self.length;
        match self.shape {
            PathShape::Square => vec![
                Vector3::zeros(),
                Vector3::new(l, 0.0, 0.0),
                Vector3::new(l, l, 0.0),
                Vector3::new(0.0, l, 0.0),
                Vector3::zeros(),
            ],
            PathShape::Line => vec![Vector3::zeros(), Vector3::new(l, 0.0, 0.0)],
            PathShape::Stationary => vec![Vector3::zeros()],
        }
    }

    pub fn path_length(&self) -> f64 {
        self.waypoints()
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }

    /// Time from start to the end of the final hold.
    pub fn duration(&self) -> f64 {
        let travel = if self.path_length() > 0.0 {
            self.path_length() / self.speed
        } else {
            0.0
        };
        self.start_hold + travel + self.end_hold
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        let pts = self.waypoints();
        let mut s = ((t - self.start_hold) * self.speed).max(0.0);
        for w in pts.windows(2) {
            let seg = (w[1] - w[0]).norm();
            if s <= seg {
                return w[0] + (w[1] - w[0]) * (s / seg);
            }
            s -= seg;
        }
        *pts.last().unwrap()
    }

    fn validate(&self) -> Result<(), SwarmError> {
        for (name, value, ok) in [
            ("leader.length", self.length, self.length >= 0.0),
            ("leader.speed", self.speed, self.speed > 0.0),
            ("leader.start_hold", self.start_hold, self.start_hold >= 0.0),
            ("leader.end_hold", self.end_hold, self.end_hold >= 0.0),
        ] {
            if !(ok && value.is_finite()) {
                return Err(SwarmError::InvalidParam {
                    name,
                    value,
                    reason: "out of range",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeaderSource {
    Scripted(ScriptedPath),
    /// Leader body follows a generated gait plan, then holds its final pose.
    Gait {
        geometry: LegGeometry,
        params: GaitParams,
        start_hold: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Controller {
    Impedance(TopologyKind),
    Apf,
    /// Potential field until `approach_time`, impedance links afterwards.
    Hybrid {
        topology: TopologyKind,
        approach_time: f64,
    },
}

impl Controller {
    pub fn label(&self) -> String {
        match self {
            Controller::Impedance(t) => t.to_string(),
            Controller::Apf => "apf".into(),
            Controller::Hybrid { topology, .. } => format!("hybrid-{topology}"),
        }
    }
}

/// Leader body oscillation: a lateral (world y) sinusoid plus seeded
/// Gaussian noise, and an optional yaw sinusoid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    /// m.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Standard deviation of the lateral noise, m.
    pub noise: f64,
    /// rad.
    pub yaw_amplitude: f64,
}

impl Disturbance {
    pub fn is_active(&self) -> bool {
        self.amplitude != 0.0 || self.noise != 0.0 || self.yaw_amplitude != 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub leader: LeaderSource,
    pub controller: Controller,
    pub offsets: Vec<Vector3<f64>>,
    /// Initial lag of every follower (slot minus actual position), m.
    pub initial_error: Vector3<f64>,
    pub impedance: ImpedanceParams,
    /// Follower-follower link gains; defaults to `(K, D/4)`.
    pub coupling: Option<CouplingGains>,
    pub apf: ApfParams,
    pub disturbance: Disturbance,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.025,
            duration: 20.0,
            seed: 0,
            leader: LeaderSource::Scripted(ScriptedPath {
                shape: PathShape::Square,
                length: 1.0,
                speed: 0.25,
                start_hold: 1.0,
                end_hold: 3.0,
            }),
            controller: Controller::Impedance(TopologyKind::Star),
            offsets: default_offsets(),
            initial_error: Vector3::zeros(),
            impedance: ImpedanceParams::default(),
            coupling: None,
            apf: ApfParams::default(),
            disturbance: Disturbance::default(),
        }
    }
}

pub fn default_offsets() -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(-0.5, 0.5, 1.0),
        Vector3::new(-0.5, -0.5, 1.0),
        Vector3::new(-1.0, 0.0, 1.0),
    ]
}

impl SimConfig {
    pub fn ticks(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }

    pub fn coupling_gains(&self) -> CouplingGains {
        self.coupling.unwrap_or(CouplingGains {
            stiffness: self.impedance.stiffness,
            damping: self.impedance.damping / 4.0,
        })
    }

    pub fn topology(&self) -> Option<TopologyKind> {
        match self.controller {
            Controller::Impedance(t) | Controller::Hybrid { topology: t, .. } => Some(t),
            Controller::Apf => None,
        }
    }

    fn validate(&self) -> Result<(), SwarmError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SwarmError::InvalidParam {
                name: "sim.dt",
                value: self.dt,
                reason: "must be positive",
            });
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(SwarmError::InvalidParam {
                name: "sim.duration",
                value: self.duration,
                reason: "must be non-negative",
            });
        }
        if let LeaderSource::Scripted(p) = &self.leader {
            p.validate()?;
        }
        if let Controller::Hybrid { approach_time, .. } = self.controller {
            if !(approach_time >= 0.0 && approach_time.is_finite()) {
                return Err(SwarmError::InvalidParam {
                    name: "swarm.approach_time",
                    value: approach_time,
                    reason: "must be non-negative",
                });
            }
        }
        let g = self.coupling_gains();
        for (name, value) in [
            ("impedance.link_stiffness", g.stiffness),
            ("impedance.link_damping", g.damping),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SwarmError::InvalidParam {
                    name,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        let d = &self.disturbance;
        for (name, value) in [
            ("disturbance.amplitude", d.amplitude),
            ("disturbance.frequency", d.frequency),
            ("disturbance.noise", d.noise),
            ("disturbance.yaw_amplitude", d.yaw_amplitude),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(SwarmError::InvalidParam {
                    name,
                    value,
                    reason: "must be non-negative",
                });
            }
        }
        self.apf.validate()
    }
}

/// Leader reference (ideal) and actual (disturbed) positions per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderTrack {
    pub ideal: Vec<Vector3<f64>>,
    pub actual: Vec<Vector3<f64>>,
    pub yaw: Vec<f64>,
}

fn gait_pose(plan: &GaitPlan, t: f64) -> (Vector3<f64>, f64) {
    let period = plan.params.command_period;
    let last = plan.ticks.len() - 1;
    let f = (t / period).max(0.0);
    let i = f.floor() as usize;
    if i >= last {
        let b = plan.ticks[last].body;
        return (Vector3::new(b.x, b.y, 0.0), b.yaw);
    }
    let w = f - i as f64;
    let (a, b) = (plan.ticks[i].body, plan.ticks[i + 1].body);
    (
        Vector3::new(a.x + w * (b.x - a.x), a.y + w * (b.y - a.y), 0.0),
        a.yaw + w * (b.yaw - a.yaw),
    )
}

impl LeaderTrack {
    /// Samples `n` ticks of the leader at spacing `config.dt`.
    pub fn build(config: &SimConfig, n: usize) -> Result<Self, SwarmError> {
        let times = (0..n).map(|k| k as f64 * config.dt);
        let (ideal, base_yaw): (Vec<_>, Vec<_>) = match &config.leader {
            LeaderSource::Scripted(p) => times.map(|t| (p.position(t), 0.0)).unzip(),
            LeaderSource::Gait {
                geometry,
                params,
                start_hold,
            } => {
                let plan = match params.gait_type {
                    GaitType::Type1 => type1_plan(geometry, params)?,
                    GaitType::Type2 => type2_plan(geometry, params)?,
                };
                times.map(|t| gait_pose(&plan, t - start_hold)).unzip()
            }
        };
        let d = &config.disturbance;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, d.noise).map_err(|_| SwarmError::InvalidParam {
            name: "disturbance.noise",
            value: d.noise,
            reason: "must be non-negative",
        })?;
        let mut actual = Vec::with_capacity(n);
        let mut yaw = Vec::with_capacity(n);
        for (k, p) in ideal.iter().enumerate() {
            let t = k as f64 * config.dt;
            let phase = TAU * d.frequency * t;
            let mut lateral = d.amplitude * phase.sin();
            if d.noise > 0.0 {
                lateral += normal.sample(&mut rng);
            }
            actual.push(p + Vector3::new(0.0, lateral, 0.0));
            yaw.push(base_yaw[k] + d.yaw_amplitude * phase.sin());
        }
        Ok(Self { ideal, actual, yaw })
    }
}

enum Followers {
    Lag(Vec<LinkState>),
    Free(Vec<AgentState>),
}

fn check_finite(states: &[AgentState], tick: usize) -> Result<(), SwarmError> {
    match states.iter().position(|s| !s.is_finite()) {
        Some(i) => Err(SwarmError::Divergence {
            tick,
            agent: i + 1,
            detail: "non-finite follower state".into(),
        }),
        None => Ok(()),
    }
}

/// Runs the fixed-step simulation. Ticks are `0..=duration/dt`; the log
/// holds the leader (agent 0) and each follower at every tick.
pub fn run_simulation(config: &SimConfig) -> Result<TrajectoryLog, SwarmError> {
    config.validate()?;
    let disc = discretize(&config.impedance, config.dt)?;
    let kind = config.topology().unwrap_or(TopologyKind::Star);
    let graph: TopologyGraph = build_topology(kind, config.offsets.len(), &config.offsets)?;
    let gains = config.coupling_gains();
    let ticks = config.ticks();
    let track = LeaderTrack::build(config, ticks + 2)?;
    let dt = config.dt;
    let leader_velocity = |k: usize| (track.actual[k + 1] - track.actual[k]) / dt;

    let initial_lag = LinkState::new(config.initial_error, Vector3::zeros());
    let mut followers = match config.controller {
        Controller::Impedance(_) => Followers::Lag(vec![initial_lag; graph.n_followers()]),
        Controller::Apf | Controller::Hybrid { .. } => Followers::Free(
            config
                .offsets
                .iter()
                .map(|o| AgentState {
                    position: track.actual[0] + o - config.initial_error,
                    velocity: Vector3::zeros(),
                    desired_offset: *o,
                })
                .collect(),
        ),
    };

    let n_agents = graph.n_agents();
    let mut log = TrajectoryLog {
        dt,
        samples: Vec::with_capacity((ticks + 1) * n_agents),
        leader_yaw: track.yaw[..=ticks].to_vec(),
    };
    for k in 0..=ticks {
        let t = k as f64 * dt;
        let (lp, lv) = (track.actual[k], leader_velocity(k));
        if let (Controller::Hybrid { approach_time, .. }, Followers::Free(states)) =
            (config.controller, &followers)
        {
            if t >= approach_time {
                followers = Followers::Lag(
                    states
                        .iter()
                        .map(|s| lag_from_follower(s, &lp, &lv))
                        .collect(),
                );
            }
        }
        let states: Vec<AgentState> = match &followers {
            Followers::Lag(lags) => lags
                .iter()
                .zip(&config.offsets)
                .map(|(l, o)| follower_from_lag(l, o, &lp, &lv))
                .collect(),
            Followers::Free(s) => s.clone(),
        };
        check_finite(&states, k)?;
        log.samples.push(Sample {
            time: t,
            agent: LEADER,
            position: lp,
            velocity: lv,
            reference: track.ideal[k],
        });
        for (i, s) in states.iter().enumerate() {
            log.samples.push(Sample {
                time: t,
                agent: i + 1,
                position: s.position,
                velocity: s.velocity,
                reference: track.ideal[k] + s.desired_offset,
            });
        }
        if k == ticks {
            break;
        }
        followers = match followers {
            Followers::Lag(lags) => Followers::Lag(impedance_controller_step(
                &graph, &disc, &lags, &lv, &gains, k,
            )?),
            Followers::Free(s) => Followers::Free(apf_controller_step(&config.apf, &s, &lp, dt)),
        };
    }
    Ok(log)
}
