use nalgebra::Vector3;

use super::plan::{leg_ik, BodyPose, GaitPlan, GaitTick, Leg, LegMount, LegState, DIAGONAL_PAIRS};
use super::MAX_SHOULDER_SWEEP;
use super::{rate_limited_segment, xi_of_alpha, GaitError, GaitParams, GaitType, ShiftState};
use crate::kinematics::{robot_height, JointAngles, LegGeometry};

// Type 2 stroke geometry: the supporting pair starts the push with the
// forearm vertical, so each foot sits at lateral distance
// rho0 = l_sh + l_ua cos(beta_init) from its shoulder axis. Sweeping the
// shoulder yaw from -a to +a while the foot stays planted moves the base by
// 2 rho0 tan(a) along x; the limb radius grows as rho0 / cos(sigma), which
// the upperarm/forearm take up at constant base height.

fn stroke_radius(geom: &LegGeometry, beta: f64) -> f64 {
    geom.l_sh + geom.l_ua * beta.cos()
}

/// Base advance of one Type 2 step for a shoulder sweep of `+-alpha_max`.
pub fn type2_stroke(geom: &LegGeometry, params: &GaitParams, alpha_max: f64) -> f64 {
    2.0 * stroke_radius(geom, params.beta_init) * alpha_max.tan()
}

/// Sweep amplitude that advances the base by `params.step_length` per step.
pub fn type2_sweep_amplitude(geom: &LegGeometry, params: &GaitParams) -> Result<f64, GaitError> {
    params.validate()?;
    let max = type2_stroke(geom, params, MAX_SHOULDER_SWEEP);
    if params.step_length > max {
        return Err(GaitError::InfeasibleSweep {
            alpha_max: MAX_SHOULDER_SWEEP,
            reason: format!(
                "step length {:.4} m needs more than the largest sweep (stroke {max:.4} m)",
                params.step_length
            ),
        });
    }
    let (mut lo, mut hi) = (0.0, MAX_SHOULDER_SWEEP);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if type2_stroke(geom, params, mid) < params.step_length {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn type2_plan(geom: &LegGeometry, params: &GaitParams) -> Result<GaitPlan, GaitError> {
    if params.gait_type != GaitType::Type2 {
        return Err(GaitError::WrongGaitType {
            expected: GaitType::Type2,
            got: params.gait_type,
        });
    }
    let a = type2_sweep_amplitude(geom, params)?;
    type2_plan_with_amplitude(geom, params, a)
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    feet: [Vector3<f64>; 4],
    stance: [bool; 4],
    body: BodyPose,
    shift: Option<ShiftState>,
}

struct Builder<'a> {
    geom: &'a LegGeometry,
    params: &'a GaitParams,
    mounts: [LegMount; 4],
    alpha_max: f64,
    ticks: Vec<GaitTick>,
}

impl Builder<'_> {
    fn tick(&self, f: &Frame) -> Result<GaitTick, GaitError> {
        let mut legs = [LegState {
            angles: JointAngles::default(),
            stance: false,
        }; 4];
        for leg in Leg::ALL {
            let i = leg.index();
            let angles = leg_ik(self.geom, &self.mounts[i], &f.feet[i], &self.params.limits)
                .map_err(|e| GaitError::InfeasibleSweep {
                    alpha_max: self.alpha_max,
                    reason: format!("leg {leg}: {e}"),
                })?;
            legs[i] = LegState {
                angles,
                stance: f.stance[i],
            };
        }
        Ok(GaitTick {
            time: 0.0,
            legs,
            body: f.body,
            shift: f.shift,
        })
    }

    fn push_tick(&mut self, mut t: GaitTick) {
        t.time = self.ticks.len() as f64 * self.params.command_period;
        self.ticks.push(t);
    }

    /// Appends a rate-limited segment `s -> frame(s)`, `s` in `(0, 1]`,
    /// and returns its final frame.
    fn segment(&mut self, frame: impl Fn(f64) -> Frame) -> Result<Frame, GaitError> {
        let max_step = self.params.max_joint_step();
        let ticks = rate_limited_segment(max_step, |s| self.tick(&frame(s)), |t| t.joint_angles())?;
        for t in ticks {
            self.push_tick(t);
        }
        Ok(frame(1.0))
    }
}

/// Type 2 plan for an explicit sweep amplitude. `alpha_max = 0` gives a gait
/// that steps in place.
pub fn type2_plan_with_amplitude(
    geom: &LegGeometry,
    params: &GaitParams,
    alpha_max: f64,
) -> Result<GaitPlan, GaitError> {
    if params.gait_type != GaitType::Type2 {
        return Err(GaitError::WrongGaitType {
            expected: GaitType::Type2,
            got: params.gait_type,
        });
    }
    params.validate()?;
    if !(0.0..=MAX_SHOULDER_SWEEP).contains(&alpha_max) {
        return Err(GaitError::InfeasibleSweep {
            alpha_max,
            reason: "outside [0, 60] degrees".into(),
        });
    }
    let beta = params.beta_init;
    let height = robot_height(geom, beta)?;
    let rho0 = stroke_radius(geom, beta);
    let l_p = geom.l_ua * beta.cos();
    let lift = params.swing_height;
    let mounts = LegMount::lateral(params.hip_offset);
    let neutral = mounts.map(|m| {
        Vector3::new(
            m.hip[0] + rho0 * m.heading.cos(),
            m.hip[1] + rho0 * m.heading.sin(),
            -height,
        )
    });
    let reach = rho0 * alpha_max.tan();
    let plant = neutral.map(|p| p + Vector3::new(reach, 0.0, 0.0));

    let mut b = Builder {
        geom,
        params,
        mounts,
        alpha_max,
        ticks: Vec::new(),
    };
    let mut cur = Frame {
        feet: neutral,
        stance: [true; 4],
        body: BodyPose::default(),
        shift: None,
    };
    let first = b.tick(&cur)?;
    b.push_tick(first);

    for k in 0..params.steps {
        let p = DIAGONAL_PAIRS[k % 2];
        let q = DIAGONAL_PAIRS[(k + 1) % 2];
        let start = cur;

        // Swing the driving pair to its forward foothold.
        let swung = b.segment(|s| {
            let mut f = start;
            for leg in p {
                let i = leg.index();
                let mut foot = start.feet[i] + (plant[i] - start.feet[i]) * s;
                foot.z = -height + lift * (std::f64::consts::PI * s).sin();
                f.feet[i] = if s >= 1.0 { plant[i] } else { foot };
                f.stance[i] = s >= 1.0;
            }
            f
        })?;

        // Raise the other pair.
        let raised = b.segment(|s| {
            let mut f = swung;
            for leg in q {
                let i = leg.index();
                f.feet[i].z = -height + lift * s;
                f.stance[i] = false;
            }
            f
        })?;

        // Push the base by sweeping the planted shoulders from -a to +a.
        let base_x = raised.body.x;
        let pushed = b.segment(|s| {
            let mut f = raised;
            let sigma = -alpha_max + 2.0 * alpha_max * s;
            let advance = rho0 * (sigma.tan() + alpha_max.tan());
            for leg in p {
                let i = leg.index();
                f.feet[i] = plant[i] - Vector3::new(advance, 0.0, 0.0);
            }
            f.body.x = base_x + advance;
            let alpha_sh = sigma.abs().min(MAX_SHOULDER_SWEEP);
            f.shift = Some(ShiftState {
                alpha_sh,
                xi: xi_of_alpha(alpha_sh, beta).unwrap_or(f64::NAN),
                l_p,
            });
            f
        })?;

        // Lower the carried pair back onto the ground.
        let lowered = b.segment(|s| {
            let mut f = pushed;
            f.shift = None;
            for leg in q {
                let i = leg.index();
                f.feet[i].z = -height + lift * (1.0 - s);
                f.stance[i] = s >= 1.0;
            }
            f
        })?;

        for _ in 0..params.pause_periods {
            let t = b.tick(&lowered)?;
            b.push_tick(t);
        }
        cur = lowered;
    }

    Ok(GaitPlan {
        gait_type: GaitType::Type2,
        geometry: *geom,
        params: params.clone(),
        mounts,
        height,
        ticks: b.ticks,
    })
}
