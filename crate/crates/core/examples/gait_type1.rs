//! Type 1 gait: stroke-and-spiral foot curve and the resulting joint schedule.

use hybrid_swarm::gait::{type1_plan, GaitParams, Type1Trajectory};
use hybrid_swarm::kinematics::LegGeometry;

fn main() {
    let geom = LegGeometry::default();
    let params = GaitParams {
        steps: 4,
        ..GaitParams::default()
    };
    let traj = Type1Trajectory::new(&geom, &params).unwrap();
    let (a, b, pole) = traj.spiral_constants();
    println!(
        "spiral r = {a:.4} + {b:.4} theta, pole at ({:.4}, {:.4})",
        pole.x, pole.y
    );
    println!("swing arc length {:.4} m", traj.swing_arc_length());
    for (phase, p) in traj.sample(8) {
        println!("  phase {phase:.3}: ({:+.4}, {:+.4})", p.x, p.y);
    }

    let plan = type1_plan(&geom, &params).unwrap();
    println!(
        "{} ticks over {:.2} s, body advance {:.4} m, max joint step {:.3} deg (limit {:.3})",
        plan.ticks.len(),
        plan.duration(),
        plan.displacement(),
        plan.max_joint_step().to_degrees(),
        params.max_joint_step().to_degrees()
    );
}
