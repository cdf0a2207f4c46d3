//! Followers start off their slots: APF brings them in, impedance holds the formation.

use hybrid_swarm::analysis::{scenario_metrics, velocity_table};
use hybrid_swarm::swarm::{run_simulation, Controller, SimConfig, TopologyKind};
use nalgebra::Vector3;

fn main() {
    let cfg = SimConfig {
        controller: Controller::Hybrid {
            topology: TopologyKind::Ring,
            approach_time: 5.0,
        },
        initial_error: Vector3::new(0.3, -0.2, 0.1),
        ..SimConfig::default()
    };
    let log = run_simulation(&cfg).unwrap();
    for t in [0.0, 2.5, 5.0, 10.0, 20.0] {
        let worst = log
            .samples
            .iter()
            .filter(|s| s.agent != 0 && (s.time - t).abs() < cfg.dt / 2.0)
            .map(|s| (s.reference - s.position).norm())
            .fold(0.0, f64::max);
        println!("t = {t:>4.1} s: worst slot error {worst:.4} m");
    }
    let m = scenario_metrics("hybrid", None, &log).unwrap();
    print!("{}", velocity_table(&[m]));
}
