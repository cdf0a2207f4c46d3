//! Leader gait generation.
//!
//! Two gaits are provided. [`type1_plan`] drives diagonal leg pairs half a
//! cycle apart around a closed foot curve: a straight ground stroke and an
//! Archimedean-spiral return arc. [`type2_plan`] plants a diagonal pair and
//! pushes the base forward by yawing the supporting shoulders, with the
//! upperarm/forearm compensation schedule tracked per tick.
//!
//! Plans are pure functions of `(LegGeometry, GaitParams)`. Every plan is
//! sampled at the servo command period and respects the servo rate limit.

mod plan;
pub(crate) use plan::fixed6;
mod type1;
mod type2;

use std::f64::consts::FRAC_PI_3;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointLimits, KinematicsError};

pub use plan::{
    leg_fk, leg_ik, BodyPose, GaitPlan, GaitTick, Leg, LegMount, LegState, DIAGONAL_PAIRS,
    GAIT_CSV_HEADER,
};
pub use type1::{type1_foot_trajectory, type1_plan, Type1Trajectory};
pub use type2::{type2_plan, type2_plan_with_amplitude, type2_stroke, type2_sweep_amplitude};

/// Largest shoulder sweep for which the compensation relation is defined.
pub const MAX_SHOULDER_SWEEP: f64 = FRAC_PI_3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("invalid gait parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("step length {step_length:.4} m exceeds the feasible maximum {max:.4} m")]
    InfeasibleStep { step_length: f64, max: f64 },
    #[error("swing height {swing_height:.4} m is outside the achievable range (0, {max:.4}) m")]
    InfeasibleSwing { swing_height: f64, max: f64 },
    #[error("shoulder sweep {alpha_max:.6} rad is infeasible: {reason}")]
    InfeasibleSweep { alpha_max: f64, reason: String },
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("expected a {expected:?} gait, got {got:?}")]
    WrongGaitType { expected: GaitType, got: GaitType },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaitType {
    Type1,
    Type2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaitParams {
    pub gait_type: GaitType,
    /// Initial upperarm depression below the horizontal, rad.
    pub beta_init: f64,
    /// Body advance per step, m.
    pub step_length: f64,
    /// Servo rate limit, rad/s.
    pub servo_angular_speed: f64,
    /// Servo command period, s.
    pub command_period: f64,
    /// Apex clearance of swinging feet, m.
    pub swing_height: f64,
    pub steps: usize,
    /// Type 2 only: idle command periods after each step.
    pub pause_periods: usize,
    /// Half the distance between left and right (and front and rear) hips, m.
    pub hip_offset: f64,
    pub limits: JointLimits,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self {
            gait_type: GaitType::Type1,
            beta_init: 45f64.to_radians(),
            step_length: 0.19,
            servo_angular_speed: 45f64.to_radians(),
            command_period: 0.025,
            swing_height: 0.03,
            steps: 5,
            pause_periods: 1,
            hip_offset: 0.1,
            limits: JointLimits::default(),
        }
    }
}

impl GaitParams {
    /// Largest joint change allowed between two successive commands.
    pub fn max_joint_step(&self) -> f64 {
        self.servo_angular_speed * self.command_period
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        let positive = [
            ("command_period", self.command_period),
            ("servo_angular_speed", self.servo_angular_speed),
            ("step_length", self.step_length),
            ("swing_height", self.swing_height),
            ("hip_offset", self.hip_offset),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GaitError::InvalidParam {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !(self.beta_init > 0.0 && self.beta_init < std::f64::consts::FRAC_PI_2) {
            return Err(GaitError::InvalidParam {
                name: "beta_init",
                value: self.beta_init,
                reason: "must lie in (0, 90) degrees",
            });
        }
        Ok(())
    }
}

/// Supporting-shoulder compensation state during a Type 2 stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftState {
    pub alpha_sh: f64,
    pub xi: f64,
    pub l_p: f64,
}

/// Base shift produced by rotating two opposite supporting limbs by `alpha_sh`
/// about their footholds, for a limb ground projection `l_p`.
pub fn horizontal_shift(alpha_sh: f64, l_p: f64) -> f64 {
    2.0 * (1.0 - alpha_sh.cos()) * l_p
}

/// Change of the upperarm's horizontal projection when it is lowered by `xi`
/// from `beta_init`.
pub fn vertical_compensation(beta_init: f64, xi: f64, l_ua: f64) -> Result<f64, GaitError> {
    if beta_init + xi > std::f64::consts::FRAC_PI_2 + 1e-12 {
        return Err(GaitError::Domain {
            what: "beta_init + xi",
            value: beta_init + xi,
            domain: "<= pi/2",
        });
    }
    Ok((beta_init.cos() - (beta_init + xi).cos()) * l_ua)
}

/// Compensation angle that balances the base shift of a shoulder sweep
/// `alpha_sh`, with the limb projection taken as `l_ua * cos(beta_init)`.
pub fn xi_of_alpha(alpha_sh: f64, beta_init: f64) -> Result<f64, GaitError> {
    if !(0.0..=MAX_SHOULDER_SWEEP + 1e-12).contains(&alpha_sh) {
        return Err(GaitError::Domain {
            what: "alpha_sh",
            value: alpha_sh,
            domain: "[0, 60] degrees",
        });
    }
    if alpha_sh == 0.0 {
        return Ok(0.0);
    }
    let arg = (2.0 * alpha_sh.cos() - 1.0) * beta_init.cos();
    if !(-1.0..=1.0).contains(&arg) {
        return Err(GaitError::Domain {
            what: "(2 cos alpha_sh - 1) cos beta_init",
            value: arg,
            domain: "[-1, 1]",
        });
    }
    Ok(arg.acos() - beta_init)
}

/// Finds the smallest number of uniform ticks over `s in [0, 1]` such that
/// consecutive joint commands differ by at most `max_step`, and returns the
/// samples for `s = 1/n, ..., 1`.
pub(crate) fn rate_limited_segment<T, F>(
    max_step: f64,
    mut sample: F,
    joints: impl Fn(&T) -> Vec<crate::kinematics::JointAngles>,
) -> Result<Vec<T>, GaitError>
where
    F: FnMut(f64) -> Result<T, GaitError>,
{
    const PROBE: usize = 256;
    let budget = max_step * (1.0 - 1e-9);
    let start = sample(0.0)?;
    let mut prev = joints(&start);
    let mut worst_rate = 0.0f64;
    for k in 1..=PROBE {
        let cur = joints(&sample(k as f64 / PROBE as f64)?);
        let d = max_diff(&prev, &cur);
        worst_rate = worst_rate.max(d * PROBE as f64);
        prev = cur;
    }
    let mut n = ((worst_rate / budget).ceil() as usize).max(1);
    loop {
        let mut out = Vec::with_capacity(n);
        let mut prev = joints(&start);
        let mut ok = true;
        for k in 1..=n {
            let frame = sample(k as f64 / n as f64)?;
            let cur = joints(&frame);
            if max_diff(&prev, &cur) > budget {
                ok = false;
                break;
            }
            prev = cur;
            out.push(frame);
        }
        if ok {
            return Ok(out);
        }
        n += (n / 32).max(1);
    }
}

fn max_diff(a: &[crate::kinematics::JointAngles], b: &[crate::kinematics::JointAngles]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}
