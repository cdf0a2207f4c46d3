use std::fmt;
use std::io::{self, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GaitParams, GaitType, ShiftState};
use crate::kinematics::{
    forward_kinematics, inverse_kinematics_with_limits, JointAngles, JointLimits, LegGeometry,
    PlanarPoint,
};

pub const GAIT_CSV_HEADER: &str =
    "time_s,leg_id,alpha_deg,beta_deg,gamma_deg,stance_flag,body_x_m,body_y_m,body_yaw_deg";

/// Six decimals, without a sign on values that round to zero.
pub(crate) fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    FL,
    FR,
    RL,
    RR,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::FL, Leg::FR, Leg::RL, Leg::RR];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::FL | Leg::FR)
    }

    pub fn is_left(self) -> bool {
        matches!(self, Leg::FL | Leg::RL)
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The two diagonal support pairs.
pub const DIAGONAL_PAIRS: [[Leg; 2]; 2] = [[Leg::FL, Leg::RR], [Leg::FR, Leg::RL]];

/// Where a leg's shoulder yaw axis sits on the base and which way its leg
/// plane points when `alpha = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegMount {
    pub hip: [f64; 2],
    pub heading: f64,
}

impl LegMount {
    /// Leg planes along the body axis, hind legs mirrored through the base center.
    pub fn sagittal(hip_offset: f64) -> [LegMount; 4] {
        Leg::ALL.map(|leg| LegMount {
            hip: hip_position(leg, hip_offset),
            heading: if leg.is_front() {
                0.0
            } else {
                std::f64::consts::PI
            },
        })
    }

    /// Leg planes perpendicular to the body axis, pointing outward.
    pub fn lateral(hip_offset: f64) -> [LegMount; 4] {
        Leg::ALL.map(|leg| LegMount {
            hip: hip_position(leg, hip_offset),
            heading: if leg.is_left() {
                std::f64::consts::FRAC_PI_2
            } else {
                -std::f64::consts::FRAC_PI_2
            },
        })
    }
}

fn hip_position(leg: Leg, h: f64) -> [f64; 2] {
    let x = if leg.is_front() { h } else { -h };
    let y = if leg.is_left() { h } else { -h };
    [x, y]
}

/// Foot position in the body frame (x forward, y left, z up, origin at the
/// base center in the hip plane).
pub fn leg_fk(geom: &LegGeometry, mount: &LegMount, angles: &JointAngles) -> Vector3<f64> {
    let planar = forward_kinematics(geom, angles);
    let radius = geom.l_sh + planar.x;
    let dir = mount.heading + angles.alpha;
    Vector3::new(
        mount.hip[0] + radius * dir.cos(),
        mount.hip[1] + radius * dir.sin(),
        planar.y,
    )
}

/// Joint angles placing the foot at `foot` (body frame). The foot must lie
/// outside the shoulder link's reach so the yaw is well defined.
pub fn leg_ik(
    geom: &LegGeometry,
    mount: &LegMount,
    foot: &Vector3<f64>,
    limits: &JointLimits,
) -> Result<JointAngles, crate::kinematics::KinematicsError> {
    let (dx, dy) = (foot.x - mount.hip[0], foot.y - mount.hip[1]);
    let (s, c) = mount.heading.sin_cos();
    let along = c * dx + s * dy;
    let across = -s * dx + c * dy;
    let alpha = across.atan2(along);
    let radius = along.hypot(across) - geom.l_sh;
    let mut angles =
        inverse_kinematics_with_limits(geom, PlanarPoint::new(radius, foot.z), limits)?;
    angles.alpha = alpha;
    limits.check(&angles)?;
    Ok(angles)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl BodyPose {
    /// Maps a body-frame point to the world frame (ground plane origin).
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let (s, c) = self.yaw.sin_cos();
        Vector3::new(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y, p.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegState {
    pub angles: JointAngles,
    pub stance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitTick {
    pub time: f64,
    pub legs: [LegState; 4],
    pub body: BodyPose,
    /// Compensation state of the supporting pair during a Type 2 stroke.
    pub shift: Option<ShiftState>,
}

impl GaitTick {
    pub fn joint_angles(&self) -> Vec<JointAngles> {
        self.legs.iter().map(|l| l.angles).collect()
    }

    pub fn stance_legs(&self) -> impl Iterator<Item = Leg> + '_ {
        Leg::ALL.into_iter().filter(|l| self.legs[l.index()].stance)
    }

    /// True when both legs of at least one diagonal pair are in stance.
    pub fn has_diagonal_support(&self) -> bool {
        DIAGONAL_PAIRS
            .iter()
            .any(|pair| pair.iter().all(|l| self.legs[l.index()].stance))
    }
}

/// Time-indexed joint schedule and body trajectory for one gait run.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitPlan {
    pub gait_type: GaitType,
    pub geometry: LegGeometry,
    pub params: GaitParams,
    pub mounts: [LegMount; 4],
    /// Hip-plane height above the ground, m.
    pub height: f64,
    pub ticks: Vec<GaitTick>,
}

impl GaitPlan {
    pub fn duration(&self) -> f64 {
        self.ticks.last().map_or(0.0, |t| t.time)
    }

    pub fn start_pose(&self) -> BodyPose {
        self.ticks.first().map(|t| t.body).unwrap_or_default()
    }

    pub fn end_pose(&self) -> BodyPose {
        self.ticks.last().map(|t| t.body).unwrap_or_default()
    }

    /// Net body displacement along x from the first to the last tick.
    pub fn displacement(&self) -> f64 {
        self.end_pose().x - self.start_pose().x
    }

    pub fn foot_body(&self, tick: usize, leg: Leg) -> Vector3<f64> {
        leg_fk(
            &self.geometry,
            &self.mounts[leg.index()],
            &self.ticks[tick].legs[leg.index()].angles,
        )
    }

    pub fn foot_world(&self, tick: usize, leg: Leg) -> Vector3<f64> {
        self.ticks[tick].body.to_world(&self.foot_body(tick, leg))
    }

    /// Largest per-joint command change between consecutive ticks.
    pub fn max_joint_step(&self) -> f64 {
        self.ticks
            .windows(2)
            .flat_map(|w| {
                w[0].legs
                    .iter()
                    .zip(&w[1].legs)
                    .map(|(a, b)| a.angles.max_abs_diff(&b.angles))
            })
            .fold(0.0, f64::max)
    }

    /// Largest world-frame motion of a foot that is in stance at both ends of a tick.
    pub fn max_stance_slip(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 1..self.ticks.len() {
            for leg in Leg::ALL {
                let i = leg.index();
                if self.ticks[k - 1].legs[i].stance && self.ticks[k].legs[i].stance {
                    let d = (self.foot_world(k, leg) - self.foot_world(k - 1, leg)).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Body yaw per tick, degrees.
    pub fn yaw_series_deg(&self) -> Vec<f64> {
        self.ticks.iter().map(|t| t.body.yaw.to_degrees()).collect()
    }

    /// Writes the joint schedule, one row per tick and leg.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{GAIT_CSV_HEADER}")?;
        for tick in &self.ticks {
            for leg in Leg::ALL {
                let s = &tick.legs[leg.index()];
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    fixed6(tick.time),
                    leg,
                    fixed6(s.angles.alpha.to_degrees()),
                    fixed6(s.angles.beta.to_degrees()),
                    fixed6(s.angles.gamma.to_degrees()),
                    u8::from(s.stance),
                    fixed6(tick.body.x),
                    fixed6(tick.body.y),
                    fixed6(tick.body.yaw.to_degrees())
                )?;
            }
        }
        Ok(())
    }

    /// Writes body-frame foot positions per tick and leg.
    pub fn write_foot_trace<W: Write>(&self, mut out: W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "time_s,leg_id,foot_x_m,foot_y_m,foot_z_m,stance_flag")?;
        for (k, tick) in self.ticks.iter().enumerate() {
            for leg in Leg::ALL {
                let p = self.foot_body(k, leg);
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fixed6(tick.time),
                    leg,
                    fixed6(p.x),
                    fixed6(p.y),
                    fixed6(p.z),
                    u8::from(tick.legs[leg.index()].stance)
                )?;
            }
        }
        Ok(())
    }
}
