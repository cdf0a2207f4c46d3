//! Critically damped impedance law: exact zero-order-hold discretization and a step response.

use hybrid_swarm::impedance::{discretize, solve_critical_damping, ImpedanceParams};

fn main() {
    let d = solve_critical_damping(1.9, 20.88).unwrap();
    let params = ImpedanceParams::new(1.9, d, 20.88, 0.2).unwrap();
    println!(
        "M = 1.9, K = 20.88 -> critical D = {d:.4}, omega_n = {:.4} rad/s",
        params.natural_frequency()
    );
    let disc = discretize(&params, 0.025).unwrap();
    println!("{}", disc.to_json());

    let force = 1.0;
    let (mut x, mut v) = (0.0, 0.0);
    for k in 1..=120 {
        (x, v) = disc.step_axis(x, v, force);
        if k % 20 == 0 {
            println!(
                "t = {:.2} s: x = {x:.6} m (F/K = {:.6})",
                k as f64 * 0.025,
                force / params.stiffness
            );
        }
    }
}
