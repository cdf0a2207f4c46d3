//! Scenario files (TOML), dotted-path overrides and conversion to [`SimConfig`].

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gait::{GaitParams, GaitType};
use crate::impedance::ImpedanceParams;
use crate::kinematics::{JointLimits, LegGeometry};
use crate::swarm::{
    ApfParams, Controller, CouplingGains, Disturbance, LeaderSource, PathShape, ScriptedPath,
    SimConfig, TopologyKind,
};

/// Keys that are valid overrides but absent from the serialized defaults.
const OPTIONAL_KEYS: &[&str] = &["impedance.link_stiffness", "impedance.link_damping"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown override key '{key}'; valid keys: {}", valid.join(", "))]
    UnknownKey { key: String, valid: Vec<String> },
    #[error("malformed override '{raw}': {reason}")]
    BadOverride { raw: String, reason: String },
    #[error("invalid config field {field}: {reason}")]
    Invalid { field: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub duration: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 0.025,
            duration: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSection {
    pub gait_type: GaitType,
    pub beta_init_deg: f64,
    pub step_length: f64,
    pub servo_speed_deg_s: f64,
    pub command_period: f64,
    pub swing_height: f64,
    pub steps: usize,
    pub pause_periods: usize,
    pub hip_offset: f64,
}

impl Default for GaitSection {
    fn default() -> Self {
        let p = GaitParams::default();
        Self {
            gait_type: p.gait_type,
            beta_init_deg: p.beta_init.to_degrees(),
            step_length: p.step_length,
            servo_speed_deg_s: p.servo_angular_speed.to_degrees(),
            command_period: p.command_period,
            swing_height: p.swing_height,
            steps: p.steps,
            pause_periods: p.pause_periods,
            hip_offset: p.hip_offset,
        }
    }
}

impl GaitSection {
    pub fn params(&self) -> GaitParams {
        GaitParams {
            gait_type: self.gait_type,
            beta_init: self.beta_init_deg.to_radians(),
            step_length: self.step_length,
            servo_angular_speed: self.servo_speed_deg_s.to_radians(),
            command_period: self.command_period,
            swing_height: self.swing_height,
            steps: self.steps,
            pause_periods: self.pause_periods,
            hip_offset: self.hip_offset,
            limits: JointLimits::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeaderKind {
    Scripted,
    Gait,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LeaderSection {
    pub source: LeaderKind,
    pub path: PathShape,
    pub length: f64,
    pub speed: f64,
    pub start_hold: f64,
    pub end_hold: f64,
}

impl Default for LeaderSection {
    fn default() -> Self {
        Self {
            source: LeaderKind::Scripted,
            path: PathShape::Square,
            length: 1.0,
            speed: 0.25,
            start_hold: 1.0,
            end_hold: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Impedance,
    Apf,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwarmSection {
    pub controller: ControllerKind,
    pub topology: TopologyKind,
    pub offsets: Vec<[f64; 3]>,
    pub initial_error: [f64; 3],
    /// Hybrid mode: seconds of potential-field approach before the links engage.
    pub approach_time: f64,
}

impl Default for SwarmSection {
    fn default() -> Self {
        Self {
            controller: ControllerKind::Impedance,
            topology: TopologyKind::Star,
            offsets: crate::swarm::default_offsets()
                .iter()
                .map(|o| [o.x, o.y, o.z])
                .collect(),
            initial_error: [0.0; 3],
            approach_time: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImpedanceSection {
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "D")]
    pub damping: f64,
    #[serde(rename = "K")]
    pub stiffness: f64,
    #[serde(rename = "K_v")]
    pub velocity_gain: f64,
    /// Follower-follower link stiffness; defaults to `K`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_stiffness: Option<f64>,
    /// Follower-follower link damping; defaults to `D/4`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_damping: Option<f64>,
}

impl Default for ImpedanceSection {
    fn default() -> Self {
        let p = ImpedanceParams::default();
        Self {
            mass: p.mass,
            damping: p.damping,
            stiffness: p.stiffness,
            velocity_gain: p.velocity_gain,
            link_stiffness: None,
            link_damping: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    pub amplitude: f64,
    pub frequency: f64,
    pub noise: f64,
    pub yaw_amplitude_deg: f64,
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            frequency: 1.0,
            noise: 0.0,
            yaw_amplitude_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub trajectory: String,
    pub metrics: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            metrics: "metrics.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub sim: SimSection,
    pub geometry: LegGeometry,
    pub gait: GaitSection,
    pub leader: LeaderSection,
    pub swarm: SwarmSection,
    pub impedance: ImpedanceSection,
    pub apf: ApfParams,
    pub disturbance: DisturbanceSection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 0,
            sim: SimSection::default(),
            geometry: LegGeometry::default(),
            gait: GaitSection::default(),
            leader: LeaderSection::default(),
            swarm: SwarmSection::default(),
            impedance: ImpedanceSection::default(),
            apf: ApfParams::default(),
            disturbance: DisturbanceSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn leaf_keys(prefix: &str, value: &toml::Value, out: &mut Vec<String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                leaf_keys(&key, v, out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

/// Every dotted key accepted by `--set`.
pub fn valid_keys() -> Vec<String> {
    let value =
        toml::Value::try_from(ScenarioConfig::default()).expect("default config serializes");
    let mut keys = Vec::new();
    leaf_keys("", &value, &mut keys);
    keys.extend(OPTIONAL_KEYS.iter().map(|k| k.to_string()));
    keys.sort();
    keys
}

/// Parses `key=value`; the value is read as a TOML literal, falling back to a
/// bare string.
pub fn parse_override(raw: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride {
            raw: raw.into(),
            reason: "expected key=value".into(),
        })?;
    let key = key.trim().to_string();
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

/// Applies dotted overrides to a raw config table.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), ConfigError> {
    if overrides.is_empty() {
        return Ok(());
    }
    let valid = valid_keys();
    for raw in overrides {
        let (key, value) = parse_override(raw)?;
        if !valid.contains(&key) {
            return Err(ConfigError::UnknownKey { key, valid });
        }
        let mut parts: Vec<&str> = key.split('.').collect();
        let leaf = parts.pop().expect("non-empty key");
        let mut cur = &mut *table;
        for p in parts {
            let entry = cur
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| ConfigError::BadOverride {
                    raw: raw.clone(),
                    reason: format!("'{p}' is not a table in the config file"),
                })?;
        }
        cur.insert(leaf.to_string(), value);
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        let cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn check(&self) -> Result<(), ConfigError> {
        for (field, name) in [
            ("output.trajectory", &self.output.trajectory),
            ("output.metrics", &self.output.metrics),
        ] {
            let plain = !name.is_empty()
                && name != "."
                && name != ".."
                && !name.contains(['/', '\\'])
                && !Path::new(name).is_absolute();
            if !plain {
                return Err(ConfigError::Invalid {
                    field: field.into(),
                    reason: format!("'{name}' must be a plain file name"),
                });
            }
        }
        if self.output.trajectory == self.output.metrics {
            return Err(ConfigError::Invalid {
                field: "output".into(),
                reason: "trajectory and metrics must differ".into(),
            });
        }
        if self.swarm.offsets.is_empty() {
            return Err(ConfigError::Invalid {
                field: "swarm.offsets".into(),
                reason: "at least one follower offset is required".into(),
            });
        }
        if self.swarm.controller != ControllerKind::Apf
            && self.swarm.topology == TopologyKind::Ring
            && self.swarm.offsets.len() < 2
        {
            return Err(ConfigError::Invalid {
                field: "swarm.topology".into(),
                reason: "a ring needs at least two followers".into(),
            });
        }
        let p = self.impedance_params();
        p.validate().map_err(|e| ConfigError::Invalid {
            field: "impedance".into(),
            reason: e.to_string(),
        })?;
        if !p.critically_damped() {
            return Err(ConfigError::Invalid {
                field: "impedance.D".into(),
                reason: format!(
                    "damping ratio {:.6} is not critical; use D = {:.6}",
                    p.damping_ratio(),
                    2.0 * (p.mass * p.stiffness).sqrt()
                ),
            });
        }
        self.geometry.validate().map_err(|e| ConfigError::Invalid {
            field: "geometry".into(),
            reason: e.to_string(),
        })?;
        self.gait
            .params()
            .validate()
            .map_err(|e| ConfigError::Invalid {
                field: "gait".into(),
                reason: e.to_string(),
            })?;
        self.apf.validate().map_err(|e| ConfigError::Invalid {
            field: "apf".into(),
            reason: e.to_string(),
        })?;
        let positive = [("sim.dt", self.sim.dt, self.sim.dt > 0.0)];
        let non_negative = [
            ("sim.duration", self.sim.duration),
            ("leader.length", self.leader.length),
            ("leader.start_hold", self.leader.start_hold),
            ("leader.end_hold", self.leader.end_hold),
            ("swarm.approach_time", self.swarm.approach_time),
            ("disturbance.amplitude", self.disturbance.amplitude),
            ("disturbance.frequency", self.disturbance.frequency),
            ("disturbance.noise", self.disturbance.noise),
            (
                "disturbance.yaw_amplitude_deg",
                self.disturbance.yaw_amplitude_deg,
            ),
        ];
        let checks = positive
            .into_iter()
            .chain([("leader.speed", self.leader.speed, self.leader.speed > 0.0)])
            .chain(non_negative.into_iter().map(|(f, v)| (f, v, v >= 0.0)));
        for (field, value, ok) in checks {
            if !(ok && value.is_finite()) {
                return Err(ConfigError::Invalid {
                    field: field.into(),
                    reason: format!("{value} is out of range"),
                });
            }
        }
        Ok(())
    }

    pub fn impedance_params(&self) -> ImpedanceParams {
        ImpedanceParams {
            mass: self.impedance.mass,
            damping: self.impedance.damping,
            stiffness: self.impedance.stiffness,
            velocity_gain: self.impedance.velocity_gain,
        }
    }

    pub fn controller(&self) -> Controller {
        match self.swarm.controller {
            ControllerKind::Impedance => Controller::Impedance(self.swarm.topology),
            ControllerKind::Apf => Controller::Apf,
            ControllerKind::Hybrid => Controller::Hybrid {
                topology: self.swarm.topology,
                approach_time: self.swarm.approach_time,
            },
        }
    }

    pub fn leader_source(&self) -> LeaderSource {
        match self.leader.source {
            LeaderKind::Scripted => LeaderSource::Scripted(ScriptedPath {
                shape: self.leader.path,
                length: self.leader.length,
                speed: self.leader.speed,
                start_hold: self.leader.start_hold,
                end_hold: self.leader.end_hold,
            }),
            LeaderKind::Gait => LeaderSource::Gait {
                geometry: self.geometry,
                params: self.gait.params(),
                start_hold: self.leader.start_hold,
            },
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let imp = self.impedance_params();
        let coupling = match (self.impedance.link_stiffness, self.impedance.link_damping) {
            (None, None) => None,
            (k, d) => Some(CouplingGains {
                stiffness: k.unwrap_or(imp.stiffness),
                damping: d.unwrap_or(imp.damping / 4.0),
            }),
        };
        SimConfig {
            dt: self.sim.dt,
            duration: self.sim.duration,
            seed: self.seed,
            leader: self.leader_source(),
            controller: self.controller(),
            offsets: self
                .swarm
                .offsets
                .iter()
                .map(|o| Vector3::from(*o))
                .collect(),
            initial_error: Vector3::from(self.swarm.initial_error),
            impedance: imp,
            coupling,
            apf: self.apf,
            disturbance: Disturbance {
                amplitude: self.disturbance.amplitude,
                frequency: self.disturbance.frequency,
                noise: self.disturbance.noise,
                yaw_amplitude: self.disturbance.yaw_amplitude_deg.to_radians(),
            },
        }
    }
}
