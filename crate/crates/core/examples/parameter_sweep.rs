//! Scenario-file sweep over stiffness (with matching critical damping) in parallel.

use hybrid_swarm::analysis::error_table;
use hybrid_swarm::cli::run_scenario;
use hybrid_swarm::config::ScenarioConfig;
use hybrid_swarm::impedance::solve_critical_damping;
use rayon::prelude::*;

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/line_1m.toml");
    let configs: Vec<ScenarioConfig> = [10.0, 20.88, 40.0, 80.0]
        .iter()
        .map(|&k| {
            let d = solve_critical_damping(1.9, k).unwrap();
            let overrides = [format!("impedance.K={k}"), format!("impedance.D={d}")];
            let mut cfg = ScenarioConfig::load(path.as_ref(), &overrides).unwrap();
            cfg.name = format!("K={k}");
            cfg
        })
        .collect();
    let metrics: Vec<_> = configs
        .par_iter()
        .map(|c| {
            run_scenario(c)
                .map(|o| o.metrics)
                .map_err(|e| format!("{e:?}"))
        })
        .collect::<Result<_, _>>()
        .unwrap();
    print!("{}", error_table(&metrics));
}
