//! Sagittal-plane kinematics of one pedipulator.
//!
//! The leg plane has `x` pointing away from the upperarm pivot along the
//! ground and `y` pointing up, so a standing foot has negative `y`. The
//! upperarm angle `beta` is measured from the horizontal, the forearm angle
//! `gamma` is relative to the upperarm, and `alpha` is the shoulder yaw that
//! rotates the whole leg plane about the vertical axis.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance inside which `cos(gamma)` is clamped back onto `[-1, 1]`.
const COS_CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("target ({:.6}, {:.6}) is unreachable; nearest reachable point is ({:.6}, {:.6})", target.x, target.y, boundary.x, boundary.y)]
    Unreachable {
        target: PlanarPoint,
        boundary: PlanarPoint,
    },
    #[error("joint {joint} = {value:.6} rad violates its limits [{min:.6}, {max:.6}]")]
    JointLimit {
        joint: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("link length {name} = {value} must be strictly positive")]
    NonPositiveLength { name: &'static str, value: f64 },
}

/// Link lengths of one pedipulator, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LegGeometry {
    /// Shoulder link: yaw axis to upperarm pivot.
    pub l_sh: f64,
    pub l_ua: f64,
    pub l_fa: f64,
    /// Wrist/footrest link. Not used by any of the kinematic relations.
    pub l_wr: f64,
}

impl Default for LegGeometry {
    fn default() -> Self {
        Self {
            l_sh: 0.093,
            l_ua: 0.154,
            l_fa: 0.206,
            l_wr: 0.044,
        }
    }
}

impl LegGeometry {
    pub fn new(l_sh: f64, l_ua: f64, l_fa: f64, l_wr: f64) -> Result<Self, KinematicsError> {
        let geom = Self {
            l_sh,
            l_ua,
            l_fa,
            l_wr,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (name, value) in [
            ("l_sh", self.l_sh),
            ("l_ua", self.l_ua),
            ("l_fa", self.l_fa),
            ("l_wr", self.l_wr),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(KinematicsError::NonPositiveLength { name, value });
            }
        }
        Ok(())
    }

    /// Length of the fully straightened upperarm + forearm chain.
    pub fn reach(&self) -> f64 {
        self.l_ua + self.l_fa
    }

    /// Inner radius of the reachable annulus.
    pub fn inner_reach(&self) -> f64 {
        (self.l_ua - self.l_fa).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl JointAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// Largest absolute per-joint difference to `other`.
    pub fn max_abs_diff(&self, other: &JointAngles) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric per-joint limits, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            alpha: (-PI, PI),
            beta: (-PI, PI),
            gamma: (-PI, PI),
        }
    }
}

impl JointLimits {
    pub fn check(&self, angles: &JointAngles) -> Result<(), KinematicsError> {
        for (joint, value, (min, max)) in [
            ("alpha", angles.alpha, self.alpha),
            ("beta", angles.beta, self.beta),
            ("gamma", angles.gamma, self.gamma),
        ] {
            if !(min..=max).contains(&value) {
                return Err(KinematicsError::JointLimit {
                    joint,
                    value,
                    min,
                    max,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Standing height of the hip above the ground for a vertical forearm.
pub fn robot_height(geom: &LegGeometry, beta_init: f64) -> Result<f64, KinematicsError> {
    if !(beta_init > 0.0 && beta_init < FRAC_PI_2) {
        return Err(KinematicsError::Domain {
            what: "beta_init",
            value: beta_init,
            domain: "(0, pi/2)",
        });
    }
    Ok(beta_init.sin() * geom.l_ua + geom.l_fa)
}

/// Horizontal distance from the hip projection to the far end of the
/// straight stance segment, i.e. where the straightened limb touches the
/// ground at height `height`.
pub fn stride_extreme(geom: &LegGeometry, height: f64) -> Result<f64, KinematicsError> {
    let reach = geom.reach();
    if !(height > 0.0 && height <= reach) {
        return Err(KinematicsError::Domain {
            what: "height",
            value: height,
            domain: "(0, l_ua + l_fa]",
        });
    }
    Ok((reach * reach - height * height).max(0.0).sqrt())
}

pub fn forward_kinematics(geom: &LegGeometry, angles: &JointAngles) -> PlanarPoint {
    let (b, g) = (angles.beta, angles.gamma);
    PlanarPoint {
        x: geom.l_ua * b.cos() + geom.l_fa * (b + g).cos(),
        y: geom.l_ua * b.sin() + geom.l_fa * (b + g).sin(),
    }
}

/// Closed-form two-link inverse kinematics on the `gamma <= 0` elbow branch.
///
/// Returns `alpha = 0`; the shoulder yaw is handled by the caller.
pub fn inverse_kinematics(
    geom: &LegGeometry,
    target: PlanarPoint,
) -> Result<JointAngles, KinematicsError> {
    inverse_kinematics_with_limits(geom, target, &JointLimits::default())
}

pub fn inverse_kinematics_with_limits(
    geom: &LegGeometry,
    target: PlanarPoint,
    limits: &JointLimits,
) -> Result<JointAngles, KinematicsError> {
    let (l1, l2) = (geom.l_ua, geom.l_fa);
    let (x, y) = (target.x, target.y);
    let mut cos_g = (x * x + y * y - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !cos_g.is_finite() || cos_g.abs() > 1.0 + COS_CLAMP_TOL {
        return Err(KinematicsError::Unreachable {
            target,
            boundary: nearest_reachable(geom, target),
        });
    }
    cos_g = cos_g.clamp(-1.0, 1.0);
    // The elbow formula uses the positive root; gamma itself is on the negative branch.
    let sin_g = (1.0 - cos_g * cos_g).sqrt();
    let gamma = -cos_g.acos();
    let beta = wrap_angle(y.atan2(x) + (l2 * sin_g).atan2(l1 + l2 * cos_g));
    let angles = JointAngles::new(0.0, beta, gamma);
    limits.check(&angles)?;
    Ok(angles)
}

/// Projects `target` radially onto the reachable annulus.
pub fn nearest_reachable(geom: &LegGeometry, target: PlanarPoint) -> PlanarPoint {
    let r = target.norm();
    let clamped = r.clamp(geom.inner_reach(), geom.reach());
    if r == 0.0 {
        return PlanarPoint::new(clamped, 0.0);
    }
    PlanarPoint::new(target.x * clamped / r, target.y * clamped / r)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}
