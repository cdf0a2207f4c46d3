//! One square leader path, followed under each topology and under APF.

use hybrid_swarm::analysis::{error_table, scenario_metrics, velocity_table};
use hybrid_swarm::swarm::{run_simulation, Controller, SimConfig, TopologyKind};

fn main() {
    let mut rows = Vec::new();
    let controllers = TopologyKind::ALL
        .iter()
        .map(|&t| Controller::Impedance(t))
        .chain([Controller::Apf]);
    for controller in controllers {
        let cfg = SimConfig {
            controller,
            ..SimConfig::default()
        };
        let log = run_simulation(&cfg).unwrap();
        rows.push(scenario_metrics(&cfg.controller.label(), None, &log).unwrap());
    }
    print!("{}\n{}", error_table(&rows), velocity_table(&rows));
}
