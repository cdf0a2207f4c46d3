//! Standing height, stride limit and an IK/FK round trip for the default leg.

use hybrid_swarm::kinematics::{
    forward_kinematics, inverse_kinematics, robot_height, stride_extreme, LegGeometry, PlanarPoint,
};

fn main() {
    let geom = LegGeometry::default();
    println!(
        "reach {:.4} m, inner reach {:.4} m",
        geom.reach(),
        geom.inner_reach()
    );
    for beta_deg in [30.0, 45.0, 60.0] {
        let h = robot_height(&geom, f64::to_radians(beta_deg)).unwrap();
        let x0 = stride_extreme(&geom, h).unwrap();
        println!("beta_init {beta_deg:>4.1} deg: height {h:.4} m, stride extreme {x0:.4} m");
    }

    let target = PlanarPoint::new(0.12, -0.25);
    let q = inverse_kinematics(&geom, target).unwrap();
    let back = forward_kinematics(&geom, &q);
    println!(
        "IK({:.3}, {:.3}) -> beta {:.3} deg, gamma {:.3} deg; FK error {:.1e} m",
        target.x,
        target.y,
        q.beta.to_degrees(),
        q.gamma.to_degrees(),
        back.distance(&target)
    );
}
