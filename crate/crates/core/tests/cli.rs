use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-swarm"))
}

fn scenario(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "scenarios", name]
        .iter()
        .collect()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn run_writes_both_outputs_deterministically() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = scenario("line_1m.toml");
    for out in [&a, &b] {
        let o = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["trajectory.csv", "metrics.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let csv = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("time_s,agent_id,x_m"));
    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["name"], "line_1m");
    assert_eq!(metrics["agents"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[sim]\ndt = \"fast\"\n").unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn non_critical_damping_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--set",
        "impedance.D=5.0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("12.59"), "{}", stderr(&o));
}

#[test]
fn unknown_override_lists_valid_keys() {
    let o = run(&["validate-config", "--set", "impedance.stifness=3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("impedance.stifness"));
    assert!(err.contains("impedance.K"), "{err}");
}

#[test]
fn validate_config_accepts_bundled_scenarios() {
    for name in ["square_path.toml", "line_1m.toml", "line_1m_gait.toml"] {
        let o = run(&[
            "validate-config",
            "--config",
            scenario(name).to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("config_hash="));
    }
}

#[test]
fn compare_needs_two_scenarios() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario("square_path.toml");
    let o = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn compare_topologies_tabulates_each() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenario("square_path.toml");
    let o = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--topologies",
        "star,ring,tree,apf",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("comparison.json")).unwrap()).unwrap();
    let names: Vec<&str> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["star", "ring", "tree", "apf"]);
    let table = fs::read_to_string(tmp.path().join("comparison.txt")).unwrap();
    for n in names {
        assert!(table.contains(n));
    }
}

#[test]
fn gait_trace_type1_curve_is_closed() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "gait-trace",
        "--out",
        tmp.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = data_rows(&tmp.path().join("foot_curve.csv"));
    let xy = |r: &str| -> (f64, f64) {
        let f: Vec<f64> = r.split(',').map(|v| v.parse().unwrap()).collect();
        (f[1], f[2])
    };
    let (first, last) = (xy(&rows[0]), xy(rows.last().unwrap()));
    assert!((first.0 - last.0).abs() < 1e-6 && (first.1 - last.1).abs() < 1e-6);
    assert!(tmp.path().join("gait_plan.csv").exists());
    assert!(tmp.path().join("foot_trace.csv").exists());
}

#[test]
fn gait_trace_type2_uses_command_period() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "gait-trace",
        "--set",
        "gait.gait_type=type2",
        "--out",
        tmp.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let times: Vec<f64> = data_rows(&tmp.path().join("gait_plan.csv"))
        .iter()
        .map(|r| r.split(',').next().unwrap().parse().unwrap())
        .collect();
    let mut distinct = times.clone();
    distinct.dedup();
    for w in distinct.windows(2) {
        assert!((w[1] - w[0] - 0.025).abs() < 1e-9);
    }
    assert!(!tmp.path().join("foot_curve.csv").exists());
}

#[test]
fn infeasible_step_exits_3() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "gait-trace",
        "--set",
        "gait.gait_type=type2",
        "--set",
        "gait.step_length=2.0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn metrics_recomputes_from_log() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "run",
        "--config",
        scenario("line_1m.toml").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&[
        "metrics",
        "--log",
        tmp.path().join("trajectory.csv").to_str().unwrap(),
        "--name",
        "line_1m",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let again: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let first: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("metrics.json")).unwrap()).unwrap();
    let rmse = |v: &serde_json::Value| v["followers"]["rmse"].as_f64().unwrap();
    assert!((rmse(&again) - rmse(&first)).abs() < 1e-8);
}

#[test]
fn metrics_rejects_empty_or_malformed_logs() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(
        &bad,
        "time_s,agent_id,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,ref_x,ref_y,ref_z\n0,0,a,0,0,0,0,0,0,0,0\n",
    )
    .unwrap();
    for log in [&empty, &bad, &tmp.path().join("missing.csv")] {
        let o = run(&["metrics", "--log", log.to_str().unwrap()]);
        assert_ne!(o.status.code(), Some(0), "{}", log.display());
    }
}

#[test]
fn sweep_writes_one_directory_per_combination() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "sweep",
        "--config",
        scenario("line_1m.toml").to_str().unwrap(),
        "--sweep",
        "swarm.topology=star,ring",
        "--sweep",
        "disturbance.amplitude=0,0.02",
        "--out",
        tmp.path().to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dirs = fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .count();
    assert_eq!(dirs, 4);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 4);
}
