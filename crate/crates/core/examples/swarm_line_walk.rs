//! Drones following a leader driven by the Type 2 gait, with and without body sway.

use hybrid_swarm::analysis::{rmse_table, scenario_metrics};
use hybrid_swarm::gait::{GaitParams, GaitType};
use hybrid_swarm::kinematics::LegGeometry;
use hybrid_swarm::swarm::{run_simulation, Disturbance, LeaderSource, SimConfig};

fn main() {
    let leader = LeaderSource::Gait {
        geometry: LegGeometry::default(),
        params: GaitParams {
            gait_type: GaitType::Type2,
            step_length: 0.2,
            steps: 5,
            ..GaitParams::default()
        },
        start_hold: 1.0,
    };
    for (name, disturbance) in [
        ("calm", Disturbance::default()),
        (
            "sway",
            Disturbance {
                amplitude: 0.02,
                frequency: 1.2,
                noise: 0.002,
                yaw_amplitude: 0.05,
            },
        ),
    ] {
        let cfg = SimConfig {
            duration: 45.0,
            leader: leader.clone(),
            disturbance,
            ..SimConfig::default()
        };
        let log = run_simulation(&cfg).unwrap();
        let m = scenario_metrics(name, None, &log).unwrap();
        println!("{name}:");
        print!("{}", rmse_table(&m));
    }
}
