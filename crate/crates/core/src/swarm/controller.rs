use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::topology::{TopologyGraph, LEADER};
use super::SwarmError;
use crate::impedance::{external_force, DiscreteImpedance, LinkState};

/// Repulsion distances are floored here to keep the potential finite.
pub const MIN_DISTANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub desired_offset: Vector3<f64>,
}

impl AgentState {
    pub fn is_finite(&self) -> bool {
        self.position
            .iter()
            .chain(self.velocity.iter())
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApfParams {
    pub k_att: f64,
    pub k_rep: f64,
    /// Repulsion influence radius, m.
    pub d0: f64,
    /// Speed cap, m/s.
    pub v_max: f64,
}

impl Default for ApfParams {
    fn default() -> Self {
        Self {
            k_att: 1.0,
            k_rep: 0.05,
            d0: 0.3,
            v_max: 0.15,
        }
    }
}

impl ApfParams {
    pub fn validate(&self) -> Result<(), SwarmError> {
        for (name, value) in [
            ("apf.k_att", self.k_att),
            ("apf.k_rep", self.k_rep),
            ("apf.d0", self.d0),
            ("apf.v_max", self.v_max),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SwarmError::InvalidParam {
                    name,
                    value,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

/// Spring-damper gains of links between two followers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingGains {
    pub stiffness: f64,
    pub damping: f64,
}

/// Net external force on each follower's lag state (index `follower - 1`).
///
/// Lag is `slot - actual` relative to the leader. Leader links push with
/// `K_v * v_leader`; follower links pull two lags together, which is the
/// spring-damper about the links' rest offsets written in lag coordinates.
pub fn link_forces(
    graph: &TopologyGraph,
    states: &[LinkState],
    leader_velocity: &Vector3<f64>,
    velocity_gain: f64,
    gains: &CouplingGains,
) -> Vec<Vector3<f64>> {
    let mut forces = vec![Vector3::zeros(); graph.n_followers()];
    let f_leader = external_force(velocity_gain, leader_velocity);
    for link in &graph.links {
        if link.leader_coupled {
            let f = link.other(LEADER).expect("leader-coupled link");
            forces[f - 1] += f_leader;
        } else {
            let (i, j) = (link.a - 1, link.b - 1);
            let rel = (states[i].delta_x - states[j].delta_x) * gains.stiffness
                + (states[i].delta_v - states[j].delta_v) * gains.damping;
            forces[i] -= rel;
            forces[j] += rel;
        }
    }
    forces
}

/// Advances every follower's lag state by one period.
pub fn impedance_controller_step(
    graph: &TopologyGraph,
    disc: &DiscreteImpedance,
    states: &[LinkState],
    leader_velocity: &Vector3<f64>,
    gains: &CouplingGains,
    tick: usize,
) -> Result<Vec<LinkState>, SwarmError> {
    let forces = link_forces(
        graph,
        states,
        leader_velocity,
        disc.params().velocity_gain,
        gains,
    );
    states
        .iter()
        .zip(&forces)
        .enumerate()
        .map(|(i, (s, f))| {
            let next = disc.step(s, f);
            if next.is_finite() && next.delta_x.norm() < 1e6 {
                Ok(next)
            } else {
                Err(SwarmError::Divergence {
                    tick,
                    agent: i + 1,
                    detail: format!("lag state {:?}", next.delta_x.as_slice()),
                })
            }
        })
        .collect()
}

/// Follower state implied by its lag behind the leader.
pub fn follower_from_lag(
    lag: &LinkState,
    slot: &Vector3<f64>,
    leader_position: &Vector3<f64>,
    leader_velocity: &Vector3<f64>,
) -> AgentState {
    AgentState {
        position: leader_position + slot - lag.delta_x,
        velocity: leader_velocity - lag.delta_v,
        desired_offset: *slot,
    }
}

/// Lag state that reproduces a follower's current position and velocity.
pub fn lag_from_follower(
    state: &AgentState,
    leader_position: &Vector3<f64>,
    leader_velocity: &Vector3<f64>,
) -> LinkState {
    LinkState {
        delta_x: leader_position + state.desired_offset - state.position,
        delta_v: leader_velocity - state.velocity,
    }
}

/// Velocity commands `-grad(U)` for the followers, clamped to `v_max`.
pub fn apf_velocity(
    params: &ApfParams,
    followers: &[AgentState],
    leader_position: &Vector3<f64>,
) -> Vec<Vector3<f64>> {
    followers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let slot = leader_position + s.desired_offset;
            let mut v = -(s.position - slot) * params.k_att;
            let repulsors = followers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, o)| (j + 1, o.position))
                .chain(std::iter::once((LEADER, *leader_position)));
            for (j, p) in repulsors {
                let diff = s.position - p;
                let d = diff.norm();
                if d >= params.d0 {
                    continue;
                }
                // Coincident agents separate along x, ordered by id.
                let dir = if d > 0.0 {
                    diff / d
                } else if i + 1 > j {
                    Vector3::x()
                } else {
                    -Vector3::x()
                };
                let d = d.max(MIN_DISTANCE);
                v += dir * (params.k_rep * (1.0 / d - 1.0 / params.d0) / (d * d));
            }
            let speed = v.norm();
            if speed > params.v_max {
                v *= params.v_max / speed;
            }
            v
        })
        .collect()
}

pub fn apf_controller_step(
    params: &ApfParams,
    followers: &[AgentState],
    leader_position: &Vector3<f64>,
    dt: f64,
) -> Vec<AgentState> {
    apf_velocity(params, followers, leader_position)
        .into_iter()
        .zip(followers)
        .map(|(v, s)| AgentState {
            position: s.position + v * dt,
            velocity: v,
            desired_offset: s.desired_offset,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impedance::{discretize, ImpedanceParams};
    use crate::swarm::topology::{build_topology, TopologyKind};

    fn offsets() -> Vec<Vector3<f64>> {
        vec![
            Vector3::new(-0.5, 0.5, 1.0),
            Vector3::new(-0.5, -0.5, 1.0),
            Vector3::new(-1.0, 0.0, 1.0),
        ]
    }

    fn gains(p: &ImpedanceParams) -> CouplingGains {
        CouplingGains {
            stiffness: p.stiffness,
            damping: p.damping / 4.0,
        }
    }

    #[test]
    fn stationary_leader_is_equilibrium() {
        let p = ImpedanceParams::default();
        let disc = discretize(&p, 0.025).unwrap();
        for kind in TopologyKind::ALL {
            let g = build_topology(kind, 3, &offsets()).unwrap();
            let states = vec![LinkState::default(); 3];
            let next =
                impedance_controller_step(&g, &disc, &states, &Vector3::zeros(), &gains(&p), 0)
                    .unwrap();
            assert_eq!(next, states);
        }
    }

    #[test]
    fn star_lag_settles_to_gain_ratio() {
        let p = ImpedanceParams::default();
        let disc = discretize(&p, 0.025).unwrap();
        let g = build_topology(TopologyKind::Star, 3, &offsets()).unwrap();
        let v = Vector3::new(0.18, -0.05, 0.0);
        let mut states = vec![LinkState::default(); 3];
        for k in 0..2000 {
            states = impedance_controller_step(&g, &disc, &states, &v, &gains(&p), k).unwrap();
        }
        for s in &states {
            assert!((s.delta_x - v * (p.velocity_gain / p.stiffness)).norm() < 1e-9);
        }
    }

    #[test]
    fn coincident_linked_followers_separate() {
        let p = ImpedanceParams::default();
        let disc = discretize(&p, 0.025).unwrap();
        let offs = vec![Vector3::new(-0.5, 0.5, 1.0), Vector3::new(-0.5, -0.5, 1.0)];
        // Ring gives the two followers a mutual link.
        let g = build_topology(TopologyKind::Ring, 2, &offs).unwrap();
        let leader = Vector3::zeros();
        let meet = Vector3::new(-0.5, 0.0, 1.0);
        let mut states: Vec<LinkState> = offs
            .iter()
            .map(|o| LinkState::new(leader + o - meet, Vector3::zeros()))
            .collect();
        let dist = |s: &[LinkState]| {
            let a = follower_from_lag(&s[0], &offs[0], &leader, &Vector3::zeros());
            let b = follower_from_lag(&s[1], &offs[1], &leader, &Vector3::zeros());
            (a.position - b.position).norm()
        };
        assert_eq!(dist(&states), 0.0);
        let mut last = 0.0;
        for k in 0..20 {
            states =
                impedance_controller_step(&g, &disc, &states, &Vector3::zeros(), &gains(&p), k)
                    .unwrap();
            let d = dist(&states);
            assert!(d > last);
            last = d;
        }
    }

    #[test]
    fn lag_round_trip() {
        let lag = LinkState::new(Vector3::new(0.1, -0.2, 0.3), Vector3::new(0.01, 0.0, -0.4));
        let slot = Vector3::new(-0.5, 0.5, 1.0);
        let (lp, lv) = (Vector3::new(1.0, 2.0, 0.0), Vector3::new(0.2, 0.0, 0.0));
        let s = follower_from_lag(&lag, &slot, &lp, &lv);
        let back = lag_from_follower(&s, &lp, &lv);
        assert!((back.delta_x - lag.delta_x).norm() < 1e-15);
        assert!((back.delta_v - lag.delta_v).norm() < 1e-15);
    }

    #[test]
    fn divergence_is_reported() {
        let p = ImpedanceParams::default();
        let disc = discretize(&p, 0.025).unwrap();
        let g = build_topology(TopologyKind::Star, 1, &offsets()[..1]).unwrap();
        let states = vec![LinkState::new(
            Vector3::new(f64::NAN, 0.0, 0.0),
            Vector3::zeros(),
        )];
        let err = impedance_controller_step(&g, &disc, &states, &Vector3::zeros(), &gains(&p), 7);
        assert!(matches!(
            err,
            Err(SwarmError::Divergence {
                tick: 7,
                agent: 1,
                ..
            })
        ));
    }

    fn at_slots(leader: &Vector3<f64>) -> Vec<AgentState> {
        offsets()
            .into_iter()
            .map(|o| AgentState {
                position: leader + o,
                velocity: Vector3::zeros(),
                desired_offset: o,
            })
            .collect()
    }

    #[test]
    fn apf_at_slots_is_still() {
        let leader = Vector3::new(0.3, 0.2, 0.0);
        for v in apf_velocity(&ApfParams::default(), &at_slots(&leader), &leader) {
            assert_eq!(v, Vector3::zeros());
        }
    }

    #[test]
    fn apf_speed_is_capped_and_coincident_agents_split() {
        let params = ApfParams::default();
        let leader = Vector3::new(5.0, -3.0, 0.0);
        let mut states = at_slots(&Vector3::zeros());
        states[1].position = states[0].position;
        let v = apf_velocity(&params, &states, &leader);
        for c in &v {
            assert!(c.norm() <= params.v_max * (1.0 + 1e-12));
        }
        let mut close = at_slots(&Vector3::zeros());
        close[1].position = close[0].position;
        let v = apf_velocity(&params, &close, &Vector3::zeros());
        // Repulsion dominates at the floor distance and pushes them apart.
        assert!(v[0].x < 0.0 && v[1].x > 0.0);
    }
}
