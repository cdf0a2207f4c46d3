//! Type 2 gait: shoulder-sweep amplitude, compensation schedule and body advance.

use hybrid_swarm::gait::{
    horizontal_shift, type2_plan, type2_sweep_amplitude, vertical_compensation, xi_of_alpha,
    GaitParams, GaitType,
};
use hybrid_swarm::kinematics::LegGeometry;

fn main() {
    let geom = LegGeometry::default();
    let params = GaitParams {
        gait_type: GaitType::Type2,
        step_length: 0.19,
        steps: 3,
        ..GaitParams::default()
    };
    let a = type2_sweep_amplitude(&geom, &params).unwrap();
    println!(
        "sweep amplitude for {:.3} m steps: {:.3} deg",
        params.step_length,
        a.to_degrees()
    );

    let l_p = geom.l_ua * params.beta_init.cos();
    for deg in [0.0, 15.0, 30.0, 45.0, 60.0] {
        let alpha = f64::to_radians(deg);
        let xi = xi_of_alpha(alpha, params.beta_init).unwrap();
        let balance = horizontal_shift(alpha, l_p)
            - vertical_compensation(params.beta_init, xi, geom.l_ua).unwrap();
        println!(
            "  alpha {deg:>4.1} deg -> xi {:.4} deg (balance residual {balance:.1e})",
            xi.to_degrees()
        );
    }

    let plan = type2_plan(&geom, &params).unwrap();
    println!(
        "{} steps: {} ticks, {:.2} s, advance {:.4} m, max stance slip {:.1e} m",
        params.steps,
        plan.ticks.len(),
        plan.duration(),
        plan.displacement(),
        plan.max_stance_slip()
    );
}
