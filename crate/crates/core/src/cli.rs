//! Command-line front end. The binary only forwards to [`run_cli`].

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{error_table, rmse_table, scenario_metrics, velocity_table, ScenarioMetrics};
use crate::config::{ConfigError, ControllerKind, ScenarioConfig};
use crate::gait::{fixed6, type1_plan, type2_plan, GaitError, GaitType, Type1Trajectory};
use crate::swarm::{run_simulation, SwarmError, TopologyKind, TrajectoryLog, LEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hybrid-swarm",
    version,
    about = "Legged-leader / drone-follower swarm simulator"
)]
pub struct Cli {
    /// Suppress tables and progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its trajectory CSV and metrics JSON.
    Run(RunArgs),
    /// Run a scenario over the cartesian product of parameter values.
    Sweep(SweepArgs),
    /// Run several scenarios on the same leader path and tabulate their metrics.
    Compare(CompareArgs),
    /// Write the leader gait's joint schedule and foot trajectories.
    GaitTrace(RunArgs),
    /// Parse and check a scenario file.
    ValidateConfig(ScenarioArgs),
    /// Compute metrics for an existing trajectory CSV.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. impedance.K=20.88 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// KEY=V1,V2,... (repeatable; combinations are crossed).
    #[arg(long = "sweep", value_name = "KEY=V1,V2", required = true)]
    pub sweep: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Scenario files to compare (repeatable).
    #[arg(long = "config")]
    pub configs: Vec<PathBuf>,
    /// Variants of one scenario: any of star, ring, tree, apf, hybrid.
    #[arg(long, value_delimiter = ',')]
    pub topologies: Vec<String>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Write the metrics JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "log")]
    pub name: String,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Divergence(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Infeasible(m)
            | CliError::Divergence(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GaitError> for CliError {
    fn from(e: GaitError) -> Self {
        CliError::Infeasible(format!("infeasible gait: {e}"))
    }
}

impl From<SwarmError> for CliError {
    fn from(e: SwarmError) -> Self {
        match e {
            SwarmError::Divergence { .. } => CliError::Divergence(e.to_string()),
            SwarmError::Gait(g) => g.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, cli.quiet),
        Command::Sweep(a) => cmd_sweep(a, cli.quiet),
        Command::Compare(a) => cmd_compare(a, cli.quiet),
        Command::GaitTrace(a) => cmd_gait_trace(a, cli.quiet),
        Command::ValidateConfig(a) => cmd_validate(a, cli.quiet),
        Command::Metrics(a) => cmd_metrics(a, cli.quiet),
    }
}

fn with_seed(set: &[String], seed: Option<u64>) -> Vec<String> {
    let mut all = set.to_vec();
    if let Some(s) = seed {
        all.push(format!("seed={s}"));
    }
    all
}

pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<ScenarioConfig, ConfigError> {
    match path {
        Some(p) => ScenarioConfig::load(p, overrides),
        None => ScenarioConfig::from_toml_str("", overrides),
    }
}

fn load_scenario(a: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    Ok(load_config(
        a.config.as_deref(),
        &with_seed(&a.set, a.seed),
    )?)
}

/// In-memory result of one scenario, written only once everything succeeded.
pub struct ScenarioOutput {
    pub config: ScenarioConfig,
    pub log: TrajectoryLog,
    pub metrics: ScenarioMetrics,
}

impl ScenarioOutput {
    pub fn trajectory_csv(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.log
            .write_csv(
                &mut buf,
                Some(&format!("config_hash={}", self.config.hash())),
            )
            .expect("in-memory write");
        buf
    }

    pub fn metrics_json(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(&self.metrics).expect("metrics serialize");
        s.push('\n');
        s.into_bytes()
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput, CliError> {
    let log = run_simulation(&config.sim_config())?;
    let metrics = scenario_metrics(&config.name, Some(&config.hash()), &log)
        .map_err(|e| CliError::Infeasible(format!("metrics: {e}")))?;
    Ok(ScenarioOutput {
        config: config.clone(),
        log,
        metrics,
    })
}

/// Writes all files or none: each goes to a temporary name first.
fn write_all(dir: &Path, files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let mut staged = Vec::new();
    for (rel, data) in files {
        let target = dir.join(rel);
        let parent = target.parent().unwrap_or(dir).to_path_buf();
        fs::create_dir_all(&parent).map_err(|e| io_err(&parent, e))?;
        let name = target.file_name().unwrap().to_string_lossy().to_string();
        let tmp = parent.join(format!(".{name}.partial"));
        let res = fs::File::create(&tmp).and_then(|mut f| f.write_all(data));
        if let Err(e) = res {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&tmp, e));
        }
        staged.push((tmp, target));
    }
    for (tmp, target) in &staged {
        fs::rename(tmp, target).map_err(|e| io_err(target, e))?;
    }
    Ok(())
}

fn cmd_run(a: &RunArgs, quiet: bool) -> Result<(), CliError> {
    let cfg = load_scenario(&a.scenario)?;
    let out = run_scenario(&cfg)?;
    write_all(
        &a.out,
        &[
            (cfg.output.trajectory.clone().into(), out.trajectory_csv()),
            (cfg.output.metrics.clone().into(), out.metrics_json()),
        ],
    )?;
    if !quiet {
        println!("{}  config_hash={}", cfg.name, cfg.hash());
        print!("{}", rmse_table(&out.metrics));
        println!();
        print!("{}", velocity_table(std::slice::from_ref(&out.metrics)));
    }
    Ok(())
}

/// Splits `a,b,[c,d]` on top-level commas.
fn split_values(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '[' | '{' => depth += 1,
            ']' | '}' => depth -= 1,
            _ => {}
        }
        if ch == ',' && depth == 0 {
            out.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(ch);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Cartesian product of `KEY=V1,V2` specs as lists of `key=value` overrides.
pub fn sweep_grid(specs: &[String]) -> Result<Vec<Vec<String>>, CliError> {
    let mut grid: Vec<Vec<String>> = vec![Vec::new()];
    for spec in specs {
        let (key, values) = spec.split_once('=').ok_or_else(|| {
            CliError::Config(format!("malformed sweep '{spec}': expected KEY=V1,V2"))
        })?;
        let values = split_values(values);
        if values.is_empty() {
            return Err(CliError::Config(format!("sweep '{spec}' has no values")));
        }
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(format!("{}={v}", key.trim()));
                    p
                })
            })
            .collect();
    }
    Ok(grid)
}

fn dir_name(index: usize, overrides: &[String]) -> String {
    let label: String = overrides
        .join("_")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._=-".contains(c) {
                c
            } else {
                '-'
            }
        })
        .collect();
    format!("{index:03}_{label}")
}

fn cmd_sweep(a: &SweepArgs, quiet: bool) -> Result<(), CliError> {
    let base = with_seed(&a.run.scenario.set, a.run.scenario.seed);
    let grid = sweep_grid(&a.sweep)?;
    let configs = grid
        .iter()
        .map(|extra| {
            let mut all = base.clone();
            all.extend(extra.iter().cloned());
            let mut cfg = load_config(a.run.scenario.config.as_deref(), &all)?;
            cfg.name = format!("{} [{}]", cfg.name, extra.join(" "));
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let results = configs
        .par_iter()
        .map(run_scenario)
        .collect::<Result<Vec<_>, _>>()?;
    let mut files = Vec::new();
    for (i, (out, extra)) in results.iter().zip(&grid).enumerate() {
        let dir = PathBuf::from(dir_name(i, extra));
        files.push((
            dir.join(&out.config.output.trajectory),
            out.trajectory_csv(),
        ));
        files.push((dir.join(&out.config.output.metrics), out.metrics_json()));
    }
    let metrics: Vec<ScenarioMetrics> = results.iter().map(|r| r.metrics.clone()).collect();
    let table = format!("{}\n{}", error_table(&metrics), velocity_table(&metrics));
    let mut summary = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    summary.push('\n');
    files.push(("summary.json".into(), summary.into_bytes()));
    files.push(("summary.txt".into(), table.clone().into_bytes()));
    write_all(&a.run.out, &files)?;
    if !quiet {
        print!("{table}");
    }
    Ok(())
}

fn variant_overrides(name: &str) -> Result<Vec<String>, CliError> {
    let lower = name.trim().to_ascii_lowercase();
    Ok(match lower.as_str() {
        "apf" => vec!["swarm.controller=apf".into()],
        "hybrid" => vec!["swarm.controller=hybrid".into()],
        other => {
            let t: TopologyKind = other.parse().map_err(CliError::Config)?;
            vec![
                "swarm.controller=impedance".into(),
                format!("swarm.topology={t}"),
            ]
        }
    })
}

fn leader_reference(log: &TrajectoryLog) -> Vec<[f64; 3]> {
    log.agent_samples(LEADER)
        .map(|s| [s.reference.x, s.reference.y, s.reference.z])
        .collect()
}

fn cmd_compare(a: &CompareArgs, quiet: bool) -> Result<(), CliError> {
    let base = with_seed(&a.set, a.seed);
    let mut configs = Vec::new();
    if a.topologies.is_empty() {
        for p in &a.configs {
            configs.push(load_config(Some(p), &base)?);
        }
    } else {
        if a.configs.len() > 1 {
            return Err(CliError::Config(
                "--topologies takes at most one --config as the base scenario".into(),
            ));
        }
        for t in &a.topologies {
            let mut all = base.clone();
            all.extend(variant_overrides(t)?);
            let mut cfg = load_config(a.configs.first().map(PathBuf::as_path), &all)?;
            cfg.name = t.trim().to_ascii_lowercase();
            configs.push(cfg);
        }
    }
    if configs.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two scenarios".into(),
        ));
    }
    let results = configs
        .par_iter()
        .map(run_scenario)
        .collect::<Result<Vec<_>, _>>()?;
    let reference = leader_reference(&results[0].log);
    for r in &results[1..] {
        if leader_reference(&r.log) != reference {
            return Err(CliError::Config(format!(
                "scenario '{}' uses a different leader reference path than '{}'",
                r.config.name, results[0].config.name
            )));
        }
    }
    let metrics: Vec<ScenarioMetrics> = results.iter().map(|r| r.metrics.clone()).collect();
    let table = format!("{}\n{}", error_table(&metrics), velocity_table(&metrics));
    let mut json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    json.push('\n');
    write_all(
        &a.out,
        &[
            ("comparison.json".into(), json.into_bytes()),
            ("comparison.txt".into(), table.clone().into_bytes()),
        ],
    )?;
    if !quiet {
        print!("{table}");
    }
    Ok(())
}

fn cmd_gait_trace(a: &RunArgs, quiet: bool) -> Result<(), CliError> {
    let cfg = load_scenario(&a.scenario)?;
    let params = cfg.gait.params();
    let plan = match params.gait_type {
        GaitType::Type1 => type1_plan(&cfg.geometry, &params)?,
        GaitType::Type2 => type2_plan(&cfg.geometry, &params)?,
    };
    let comment = format!("config_hash={}", cfg.hash());
    let mut schedule = Vec::new();
    plan.write_csv(&mut schedule, Some(&comment))
        .expect("in-memory write");
    let mut trace = Vec::new();
    plan.write_foot_trace(&mut trace, Some(&comment))
        .expect("in-memory write");
    let mut files = vec![
        (PathBuf::from("gait_plan.csv"), schedule),
        (PathBuf::from("foot_trace.csv"), trace),
    ];
    if params.gait_type == GaitType::Type1 {
        let traj = Type1Trajectory::new(&cfg.geometry, &params)?;
        let mut curve = format!("# {comment}\nphase,x_m,y_m,stance_flag\n");
        for (phase, p) in traj.sample(400) {
            curve.push_str(&format!(
                "{phase:.6},{},{},{}\n",
                fixed6(p.x),
                fixed6(p.y),
                u8::from(Type1Trajectory::is_stance(phase) && phase < 1.0)
            ));
        }
        files.push(("foot_curve.csv".into(), curve.into_bytes()));
    }
    write_all(&a.out, &files)?;
    if !quiet {
        println!(
            "{:?} gait: {} ticks over {:.3} s, displacement {:.4} m, max joint step {:.4} deg",
            plan.gait_type,
            plan.ticks.len(),
            plan.duration(),
            plan.displacement(),
            plan.max_joint_step().to_degrees()
        );
    }
    Ok(())
}

fn cmd_validate(a: &ScenarioArgs, quiet: bool) -> Result<(), CliError> {
    let cfg = load_scenario(a)?;
    if cfg.swarm.controller != ControllerKind::Apf {
        crate::impedance::discretize(&cfg.impedance_params(), cfg.sim.dt)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if !quiet {
        println!("ok  {}  config_hash={}", cfg.name, cfg.hash());
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs, quiet: bool) -> Result<(), CliError> {
    let file = fs::File::open(&a.log).map_err(|e| io_err(&a.log, e))?;
    let log = TrajectoryLog::read_csv(file)
        .map_err(|e| CliError::Config(format!("{}: {e}", a.log.display())))?;
    let metrics =
        scenario_metrics(&a.name, None, &log).map_err(|e| CliError::Config(e.to_string()))?;
    let mut json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    json.push('\n');
    match &a.out {
        Some(p) => {
            let dir = p
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let name = p
                .file_name()
                .ok_or_else(|| CliError::Config(format!("{} is not a file path", p.display())))?;
            write_all(dir, &[(PathBuf::from(name), json.into_bytes())])?;
            if !quiet {
                print!("{}", rmse_table(&metrics));
            }
        }
        None => print!("{json}"),
    }
    Ok(())
}
