use std::f64::consts::FRAC_PI_2;

use super::plan::{BodyPose, GaitPlan, GaitTick, Leg, LegMount, LegState};
use super::{GaitError, GaitParams, GaitType};
use crate::kinematics::{
    inverse_kinematics_with_limits, robot_height, stride_extreme, JointAngles, LegGeometry,
    PlanarPoint,
};

/// Closed foot curve of the continuous gait, in the front-leg plane
/// (x forward from the upperarm pivot, y up).
///
/// Phase `[0, 0.5)` is the ground stroke from `+step/2` to `-step/2` at
/// height `-H`. Phase `[0.5, 1)` returns the foot along an Archimedean
/// spiral `r = a + b*theta` whose pole sits a depth `d` below the stroke's
/// front end; `d` is solved so that the arc's apex clears the ground by
/// `swing_height`. The return arc is traversed at constant arc speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Type1Trajectory {
    pub height: f64,
    pub step: f64,
    pub swing_height: f64,
    spiral: Spiral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Spiral {
    /// Pole relative to the stroke's front end.
    pole: (f64, f64),
    a: f64,
    b: f64,
    r_start: f64,
    r_end: f64,
}

impl Spiral {
    /// Spiral from the stroke's rear end `(-step, 0)` to its front end
    /// `(0, 0)`, both relative to the front end, with the pole at `(0, -d)`.
    fn new(step: f64, d: f64) -> Self {
        let r_end = d;
        let theta_end = FRAC_PI_2;
        let r_start = step.hypot(d);
        let theta_start = d.atan2(-step);
        let b = (r_start - r_end) / (theta_start - theta_end);
        let a = r_end - b * theta_end;
        Self {
            pole: (0.0, -d),
            a,
            b,
            r_start,
            r_end,
        }
    }

    fn theta(&self, r: f64) -> f64 {
        (r - self.a) / self.b
    }

    fn point(&self, r: f64) -> (f64, f64) {
        let th = self.theta(r);
        (self.pole.0 + r * th.cos(), self.pole.1 + r * th.sin())
    }

    /// Arc-length antiderivative in terms of the radius.
    fn arc(&self, r: f64) -> f64 {
        let u = r / self.b;
        0.5 * self.b * (u * (1.0 + u * u).sqrt() + u.asinh())
    }

    fn length(&self) -> f64 {
        self.arc(self.r_start) - self.arc(self.r_end)
    }

    /// Radius at fraction `q` of the arc length measured from the start.
    fn radius_at(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.r_start;
        }
        if q >= 1.0 {
            return self.r_end;
        }
        let target = self.arc(self.r_start) - q * self.length();
        let (mut lo, mut hi) = (self.r_end, self.r_start);
        let mut r = self.r_start + q * (self.r_end - self.r_start);
        for _ in 0..100 {
            let f = self.arc(r) - target;
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let deriv = (1.0 + (r / self.b).powi(2)).sqrt();
            let mut next = r - f / deriv;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-16 * r.max(1.0) {
                return next;
            }
            r = next;
        }
        r
    }

    /// Highest point of the arc above the stroke line.
    fn clearance(&self) -> f64 {
        let y = |r: f64| self.point(r).1;
        const N: usize = 256;
        let (mut best, mut best_k) = (f64::NEG_INFINITY, 0);
        for k in 0..=N {
            let r = self.r_end + (self.r_start - self.r_end) * k as f64 / N as f64;
            let v = y(r);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        let step = (self.r_start - self.r_end) / N as f64;
        let mut lo = self.r_end + step * best_k.saturating_sub(1) as f64;
        let mut hi = (self.r_end + step * (best_k + 1) as f64).min(self.r_start);
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - inv_phi * (hi - lo);
            let m2 = lo + inv_phi * (hi - lo);
            if y(m1) < y(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        best.max(y(0.5 * (lo + hi)))
    }
}

fn solve_pole_depth(step: f64, swing_height: f64) -> Result<f64, GaitError> {
    let clearance = |d: f64| Spiral::new(step, d).clearance();
    let (mut lo, mut hi) = ((step * 1e-6).ln(), (step * 1e6).ln());
    let max = clearance(lo.exp());
    if !(swing_height < max && swing_height > clearance(hi.exp())) {
        return Err(GaitError::InfeasibleSwing { swing_height, max });
    }
    // Clearance shrinks monotonically as the pole moves deeper.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clearance(mid.exp()) > swing_height {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

impl Type1Trajectory {
    pub fn new(geom: &LegGeometry, params: &GaitParams) -> Result<Self, GaitError> {
        params.validate()?;
        let height = robot_height(geom, params.beta_init)?;
        let x0 = stride_extreme(geom, height)?;
        if params.step_length > 2.0 * x0 {
            return Err(GaitError::InfeasibleStep {
                step_length: params.step_length,
                max: 2.0 * x0,
            });
        }
        let d = solve_pole_depth(params.step_length, params.swing_height)?;
        Ok(Self {
            height,
            step: params.step_length,
            swing_height: params.swing_height,
            spiral: Spiral::new(params.step_length, d),
        })
    }

    pub fn is_stance(phase: f64) -> bool {
        phase < 0.5
    }

    /// Foot position at `phase` in `[0, 1]`; `at(1.0) == at(0.0)`.
    pub fn at(&self, phase: f64) -> PlanarPoint {
        let half = 0.5 * self.step;
        if phase < 0.5 {
            PlanarPoint::new(half - self.step * (phase / 0.5), -self.height)
        } else {
            let q = (phase - 0.5) / 0.5;
            let (x, y) = self.spiral.point(self.spiral.radius_at(q));
            // Snap the arc ends exactly onto the stroke line.
            let y = if q <= 0.0 || q >= 1.0 { 0.0 } else { y };
            PlanarPoint::new(half + x, y - self.height)
        }
    }

    pub fn swing_arc_length(&self) -> f64 {
        self.spiral.length()
    }

    /// Spiral constants `(a, b)` and the pole position in the leg plane.
    pub fn spiral_constants(&self) -> (f64, f64, PlanarPoint) {
        let s = &self.spiral;
        (
            s.a,
            s.b,
            PlanarPoint::new(0.5 * self.step + s.pole.0, s.pole.1 - self.height),
        )
    }

    /// Dense samples over `[0, 1]`, first and last coincide.
    pub fn sample(&self, n: usize) -> Vec<(f64, PlanarPoint)> {
        (0..=n)
            .map(|k| {
                let phase = k as f64 / n as f64;
                (phase, self.at(phase))
            })
            .collect()
    }
}

pub fn type1_foot_trajectory(
    geom: &LegGeometry,
    params: &GaitParams,
    phase: f64,
) -> Result<PlanarPoint, GaitError> {
    if params.gait_type != GaitType::Type1 {
        return Err(GaitError::WrongGaitType {
            expected: GaitType::Type1,
            got: params.gait_type,
        });
    }
    if !(0.0..=1.0).contains(&phase) {
        return Err(GaitError::Domain {
            what: "phase",
            value: phase,
            domain: "[0, 1]",
        });
    }
    Ok(Type1Trajectory::new(geom, params)?.at(phase))
}

/// Leg states with pair (FL, RR) at `phase_a` and pair (FR, RL) half a cycle later.
fn leg_states(
    geom: &LegGeometry,
    params: &GaitParams,
    traj: &Type1Trajectory,
    phase_a: f64,
) -> Result<[LegState; 4], GaitError> {
    let phase_b = (phase_a + 0.5) % 1.0;
    let mut out = [LegState {
        angles: JointAngles::default(),
        stance: false,
    }; 4];
    for leg in Leg::ALL {
        let phase = match leg {
            Leg::FL | Leg::RR => phase_a,
            Leg::FR | Leg::RL => phase_b,
        };
        let mut p = traj.at(phase);
        if !leg.is_front() {
            p.x = -p.x;
        }
        out[leg.index()] = LegState {
            angles: inverse_kinematics_with_limits(geom, p, &params.limits)?,
            stance: Type1Trajectory::is_stance(phase),
        };
    }
    Ok(out)
}

fn max_step(a: &[LegState; 4], b: &[LegState; 4]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.angles.max_abs_diff(&y.angles))
        .fold(0.0, f64::max)
}

/// Smallest tick count per half cycle that keeps every joint inside the
/// servo rate limit over a full cycle.
fn ticks_per_half_cycle(
    geom: &LegGeometry,
    params: &GaitParams,
    traj: &Type1Trajectory,
) -> Result<usize, GaitError> {
    let budget = params.max_joint_step() * (1.0 - 1e-9);
    let worst_over = |samples: usize| -> Result<f64, GaitError> {
        let states = (0..samples)
            .map(|k| leg_states(geom, params, traj, k as f64 / samples as f64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..samples)
            .map(|k| max_step(&states[k], &states[(k + 1) % samples]))
            .fold(0.0, f64::max))
    };
    const PROBE: usize = 1024;
    let rate = worst_over(PROBE)? * PROBE as f64;
    let mut n = ((rate / budget / 2.0).ceil() as usize).max(1);
    while worst_over(2 * n)? > budget {
        n += (n / 32).max(1);
    }
    Ok(n)
}

pub fn type1_plan(geom: &LegGeometry, params: &GaitParams) -> Result<GaitPlan, GaitError> {
    if params.gait_type != GaitType::Type1 {
        return Err(GaitError::WrongGaitType {
            expected: GaitType::Type1,
            got: params.gait_type,
        });
    }
    let traj = Type1Trajectory::new(geom, params)?;
    let n = ticks_per_half_cycle(geom, params, &traj)?;
    let cycle = 2 * n;
    let total = params.steps * n;
    let mut ticks = Vec::with_capacity(total + 1);
    for k in 0..=total {
        let phase_a = (k % cycle) as f64 / cycle as f64;
        ticks.push(GaitTick {
            time: k as f64 * params.command_period,
            legs: leg_states(geom, params, &traj, phase_a)?,
            body: BodyPose {
                x: params.step_length * k as f64 / n as f64,
                y: 0.0,
                yaw: 0.0,
            },
            shift: None,
        });
    }
    Ok(GaitPlan {
        gait_type: GaitType::Type1,
        geometry: *geom,
        params: params.clone(),
        mounts: LegMount::sagittal(params.hip_offset),
        height: traj.height,
        ticks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (LegGeometry, GaitParams) {
        (LegGeometry::default(), GaitParams::default())
    }

    #[test]
    fn stance_is_on_ground_line() {
        let (g, p) = setup();
        let traj = Type1Trajectory::new(&g, &p).unwrap();
        for k in 0..500 {
            let phase = k as f64 / 1000.0;
            assert_eq!(traj.at(phase).y, -traj.height);
        }
    }

    #[test]
    fn curve_is_closed() {
        let (g, p) = setup();
        let a = type1_foot_trajectory(&g, &p, 0.0).unwrap();
        let b = type1_foot_trajectory(&g, &p, 1.0 - 1e-12).unwrap();
        assert!(a.distance(&b) < 1e-9);
        let c = type1_foot_trajectory(&g, &p, 1.0).unwrap();
        assert!(a.distance(&c) < 1e-15);
    }

    #[test]
    fn swing_apex_equals_clearance() {
        let (g, p) = setup();
        for h in [0.01, 0.03, 0.05] {
            let params = GaitParams {
                swing_height: h,
                ..p.clone()
            };
            let traj = Type1Trajectory::new(&g, &params).unwrap();
            let apex = (0..=100_000)
                .map(|k| traj.at(0.5 + 0.5 * k as f64 / 100_000.0).y + traj.height)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((apex - h).abs() < 1e-6, "apex {apex} vs {h}");
        }
    }

    #[test]
    fn swing_is_archimedean_and_constant_speed() {
        let (g, p) = setup();
        let traj = Type1Trajectory::new(&g, &p).unwrap();
        let (a, b, pole) = traj.spiral_constants();
        assert!(b > 0.0);
        let n = 2000;
        let mut seg = Vec::new();
        let mut prev = traj.at(0.5);
        for k in 1..=n {
            let phase = 0.5 + 0.5 * k as f64 / n as f64;
            let pt = traj.at(phase);
            let (dx, dy) = (pt.x - pole.x, pt.y - pole.y);
            let r = dx.hypot(dy);
            let th = dy.atan2(dx);
            assert!((r - (a + b * th)).abs() < 1e-9, "off spiral at {k}");
            seg.push(pt.distance(&prev));
            prev = pt;
        }
        let mean = seg.iter().sum::<f64>() / n as f64;
        assert!((mean * n as f64 - traj.swing_arc_length()).abs() < 1e-6);
        for s in seg {
            assert!((s - mean).abs() < 1e-6 * mean.max(1e-3) + 1e-9);
        }
    }

    #[test]
    fn clearance_is_monotone_in_pole_depth() {
        let mut last = f64::INFINITY;
        for k in -40..40 {
            let d = 0.19 * 10f64.powf(k as f64 / 10.0);
            let c = Spiral::new(0.19, d).clearance();
            assert!(c < last, "not decreasing at d = {d}");
            last = c;
        }
    }

    #[test]
    fn rejects_unreachable_step_and_swing() {
        let (g, p) = setup();
        let h = robot_height(&g, p.beta_init).unwrap();
        let x0 = stride_extreme(&g, h).unwrap();
        let params = GaitParams {
            step_length: 2.0 * x0 + 1e-3,
            ..p.clone()
        };
        assert!(matches!(
            type1_plan(&g, &params),
            Err(GaitError::InfeasibleStep { .. })
        ));
        let params = GaitParams {
            swing_height: 0.5,
            ..p.clone()
        };
        assert!(matches!(
            type1_plan(&g, &params),
            Err(GaitError::InfeasibleSwing { .. })
        ));
        let params = GaitParams {
            gait_type: GaitType::Type2,
            ..p
        };
        assert!(type1_plan(&g, &params).is_err());
        assert!(type1_foot_trajectory(&g, &params, 0.2).is_err());
    }

    #[test]
    fn zero_steps_is_a_single_pose() {
        let (g, p) = setup();
        let plan = type1_plan(&g, &GaitParams { steps: 0, ..p }).unwrap();
        assert_eq!(plan.ticks.len(), 1);
        assert_eq!(plan.start_pose(), plan.end_pose());
    }

    #[test]
    fn plan_properties() {
        let (g, p) = setup();
        let plan = type1_plan(&g, &p).unwrap();
        assert!((plan.displacement() - 5.0 * p.step_length).abs() < 1e-6);
        assert!(plan.max_joint_step() <= p.max_joint_step());
        assert!(plan.max_stance_slip() < 1e-9, "{}", plan.max_stance_slip());
        for (k, tick) in plan.ticks.iter().enumerate() {
            assert!(tick.has_diagonal_support());
            let fl = tick.legs[Leg::FL.index()].stance;
            assert_eq!(fl, tick.legs[Leg::RR.index()].stance);
            assert_eq!(fl, !tick.legs[Leg::FR.index()].stance);
            assert_eq!(fl, !tick.legs[Leg::RL.index()].stance);
            assert!((tick.time - k as f64 * p.command_period).abs() < 1e-12);
            assert_eq!(tick.body.y, 0.0);
            assert_eq!(tick.body.yaw, 0.0);
        }
    }

    #[test]
    fn hind_legs_mirror_front_legs() {
        let (g, p) = setup();
        let plan = type1_plan(&g, &p).unwrap();
        for k in 0..plan.ticks.len() {
            let fl = plan.foot_body(k, Leg::FL);
            let rl = plan.foot_body(k, Leg::RL);
            let fr = plan.foot_body(k, Leg::FR);
            // RL runs half a cycle behind FL, like FR, and moves in the same body direction.
            assert!((rl.z - fr.z).abs() < 1e-12);
            let hip = p.hip_offset + g.l_sh;
            assert!(((fr.x - hip) - (rl.x + hip)).abs() < 1e-12);
            assert!(fl.x > 0.0 && rl.x < 0.0);
        }
    }
}
