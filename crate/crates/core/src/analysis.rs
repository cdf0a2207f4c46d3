//! Tracking-error and velocity metrics over trajectory logs.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use crate::swarm::{Sample, TrajectoryLog, LEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no samples for agent {agent}")]
    Empty { agent: usize },
    #[error("agent {agent} has {n} samples, need at least 2")]
    TooFewSamples { agent: usize, n: usize },
    #[error("reference segment has zero length")]
    DegenerateSegment,
    #[error("non-increasing time stamps for agent {agent}")]
    BadTime { agent: usize },
}

fn samples(log: &TrajectoryLog, agent: usize) -> Result<Vec<&Sample>, AnalysisError> {
    let s: Vec<&Sample> = log.agent_samples(agent).collect();
    if s.is_empty() {
        Err(AnalysisError::Empty { agent })
    } else {
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisError {
    pub mean_x: f64,
    pub mean_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

/// Mean and max of `|actual - reference|` along x and y.
pub fn per_axis_error(log: &TrajectoryLog, agent: usize) -> Result<AxisError, AnalysisError> {
    let s = samples(log, agent)?;
    let n = s.len() as f64;
    let (mut sx, mut sy, mut mx, mut my) = (0.0, 0.0, 0.0f64, 0.0f64);
    for p in &s {
        let e = (p.position - p.reference).abs();
        sx += e.x;
        sy += e.y;
        mx = mx.max(e.x);
        my = my.max(e.y);
    }
    Ok(AxisError {
        mean_x: sx / n,
        mean_y: sy / n,
        max_x: mx,
        max_y: my,
    })
}

/// Mean and max horizontal distance from the line through `a` and `b`.
pub fn crosstrack(
    log: &TrajectoryLog,
    agent: usize,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
) -> Result<(f64, f64), AnalysisError> {
    let s = samples(log, agent)?;
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return Err(AnalysisError::DegenerateSegment);
    }
    let (mut sum, mut max) = (0.0, 0.0f64);
    for p in &s {
        let d = ((p.position.x - a.x) * dy - (p.position.y - a.y) * dx).abs() / len;
        sum += d;
        max = max.max(d);
    }
    Ok((sum / s.len() as f64, max))
}

/// Root-mean-square and maximum of the Euclidean tracking error.
pub fn rmse_and_max(log: &TrajectoryLog, agent: usize) -> Result<(f64, f64), AnalysisError> {
    let s = samples(log, agent)?;
    let (mut sq, mut max) = (0.0, 0.0f64);
    for p in &s {
        let e = (p.position - p.reference).norm();
        sq += e * e;
        max = max.max(e);
    }
    Ok(((sq / s.len() as f64).sqrt(), max))
}

/// Mean and max horizontal speed from finite differences of position.
pub fn velocity_stats(log: &TrajectoryLog, agent: usize) -> Result<(f64, f64), AnalysisError> {
    let s = samples(log, agent)?;
    if s.len() < 2 {
        return Err(AnalysisError::TooFewSamples { agent, n: s.len() });
    }
    let (mut sum, mut max) = (0.0, 0.0f64);
    for w in s.windows(2) {
        let dt = w[1].time - w[0].time;
        if dt.is_nan() || dt <= 0.0 {
            return Err(AnalysisError::BadTime { agent });
        }
        let d = w[1].position - w[0].position;
        let v = d.x.hypot(d.y) / dt;
        sum += v;
        max = max.max(v);
    }
    Ok((sum / (s.len() - 1) as f64, max))
}

/// Population standard deviation of a yaw series given in radians, in degrees.
pub fn yaw_std_deg(yaw: &[f64]) -> Option<f64> {
    if yaw.is_empty() {
        return None;
    }
    let n = yaw.len() as f64;
    let mean = yaw.iter().sum::<f64>() / n;
    let var = yaw.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt().to_degrees())
}

/// Pools per-agent RMSEs `(rmse, sample_count)` into one RMSE.
pub fn combine_rmse(parts: &[(f64, usize)]) -> f64 {
    let n: usize = parts.iter().map(|p| p.1).sum();
    if n == 0 {
        return 0.0;
    }
    (parts.iter().map(|(r, k)| r * r * *k as f64).sum::<f64>() / n as f64).sqrt()
}

/// Endpoints of the agent's reference when it is a straight, non-degenerate segment.
pub fn straight_reference(
    log: &TrajectoryLog,
    agent: usize,
) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let s: Vec<&Sample> = log.agent_samples(agent).collect();
    let a = s.first()?.reference;
    let b = s.iter().map(|p| p.reference).max_by(|p, q| {
        let dp = (p - a).xy().norm();
        let dq = (q - a).xy().norm();
        dp.total_cmp(&dq)
    })?;
    let dir = (b - a).xy();
    let len = dir.norm();
    if len < 1e-9 {
        return None;
    }
    let straight = s.iter().all(|p| {
        let r = (p.reference - a).xy();
        (r.x * dir.y - r.y * dir.x).abs() / len < 1e-9
    });
    straight.then_some((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathMetrics {
    pub agent: usize,
    pub samples: usize,
    pub mean_err_x: f64,
    pub mean_err_y: f64,
    pub max_err_x: f64,
    pub max_err_y: f64,
    pub rmse: f64,
    pub max_err: f64,
    /// Present when the agent's reference is a straight segment.
    pub crosstrack_mean: Option<f64>,
    pub crosstrack_max: Option<f64>,
    pub mean_speed: f64,
    pub max_speed: f64,
    /// Leader only, degrees.
    pub yaw_std: Option<f64>,
}

pub fn path_metrics(log: &TrajectoryLog, agent: usize) -> Result<PathMetrics, AnalysisError> {
    let axis = per_axis_error(log, agent)?;
    let (rmse, max_err) = rmse_and_max(log, agent)?;
    let (mean_speed, max_speed) = velocity_stats(log, agent)?;
    let (crosstrack_mean, crosstrack_max) = match straight_reference(log, agent) {
        Some((a, b)) => {
            let (m, x) = crosstrack(log, agent, &a, &b)?;
            (Some(m), Some(x))
        }
        None => (None, None),
    };
    Ok(PathMetrics {
        agent,
        samples: log.agent_samples(agent).count(),
        mean_err_x: axis.mean_x,
        mean_err_y: axis.mean_y,
        max_err_x: axis.max_x,
        max_err_y: axis.max_y,
        rmse,
        max_err,
        crosstrack_mean,
        crosstrack_max,
        mean_speed,
        max_speed,
        yaw_std: if agent == LEADER {
            yaw_std_deg(&log.leader_yaw)
        } else {
            None
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FollowerSummary {
    pub rmse: f64,
    pub max_err: f64,
    pub mean_speed: f64,
    pub max_speed: f64,
    pub mean_err_x: f64,
    pub mean_err_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioMetrics {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub agents: Vec<PathMetrics>,
    pub followers: FollowerSummary,
}

pub fn scenario_metrics(
    name: &str,
    config_hash: Option<&str>,
    log: &TrajectoryLog,
) -> Result<ScenarioMetrics, AnalysisError> {
    let agents = log
        .agents()
        .into_iter()
        .map(|a| path_metrics(log, a))
        .collect::<Result<Vec<_>, _>>()?;
    let f: Vec<&PathMetrics> = agents.iter().filter(|m| m.agent != LEADER).collect();
    let n = f.len().max(1) as f64;
    let followers = FollowerSummary {
        rmse: combine_rmse(&f.iter().map(|m| (m.rmse, m.samples)).collect::<Vec<_>>()),
        max_err: f.iter().map(|m| m.max_err).fold(0.0, f64::max),
        mean_speed: f.iter().map(|m| m.mean_speed).sum::<f64>() / n,
        max_speed: f.iter().map(|m| m.max_speed).fold(0.0, f64::max),
        mean_err_x: f.iter().map(|m| m.mean_err_x).sum::<f64>() / n,
        mean_err_y: f.iter().map(|m| m.mean_err_y).sum::<f64>() / n,
    };
    Ok(ScenarioMetrics {
        name: name.to_string(),
        config_hash: config_hash.map(str::to_string),
        agents,
        followers,
    })
}

fn agent_label(agent: usize) -> String {
    if agent == LEADER {
        "leader".into()
    } else {
        format!("follower {agent}")
    }
}

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let cells: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    };
    line(headers.to_vec(), &mut out);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    line(rule.iter().map(String::as_str).collect(), &mut out);
    for r in rows {
        line(r.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Mean and max positional error per axis, one row per scenario (followers pooled).
pub fn error_table(scenarios: &[ScenarioMetrics]) -> String {
    let rows: Vec<Vec<String>> = scenarios
        .iter()
        .map(|s| {
            let f = s.agents.iter().filter(|m| m.agent != LEADER);
            let max_x = f.clone().map(|m| m.max_err_x).fold(0.0, f64::max);
            let max_y = f.map(|m| m.max_err_y).fold(0.0, f64::max);
            vec![
                s.name.clone(),
                format!("{:.3}", s.followers.mean_err_x),
                format!("{:.3}", s.followers.mean_err_y),
                format!("{max_x:.3}"),
                format!("{max_y:.3}"),
            ]
        })
        .collect();
    table(
        &[
            "scenario",
            "mean err x, m",
            "mean err y, m",
            "max err x, m",
            "max err y, m",
        ],
        &rows,
    )
}

pub fn velocity_table(scenarios: &[ScenarioMetrics]) -> String {
    let rows: Vec<Vec<String>> = scenarios
        .iter()
        .map(|s| {
            vec![
                s.name.clone(),
                format!("{:.3}", s.followers.max_speed),
                format!("{:.3}", s.followers.mean_speed),
            ]
        })
        .collect();
    table(
        &["scenario", "max velocity, m/s", "mean velocity, m/s"],
        &rows,
    )
}

/// RMSE and max error per agent plus the pooled follower row.
pub fn rmse_table(scenario: &ScenarioMetrics) -> String {
    let mut rows: Vec<Vec<String>> = scenario
        .agents
        .iter()
        .filter(|m| m.agent != LEADER)
        .map(|m| {
            vec![
                agent_label(m.agent),
                format!("{:.4}", m.rmse),
                format!("{:.4}", m.max_err),
            ]
        })
        .collect();
    rows.push(vec![
        "followers overall".into(),
        format!("{:.4}", scenario.followers.rmse),
        format!("{:.4}", scenario.followers.max_err),
    ]);
    table(&["agent", "RMSE, m", "max error, m"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn log_from(points: &[(Vector3<f64>, Vector3<f64>)], dt: f64) -> TrajectoryLog {
        TrajectoryLog {
            dt,
            samples: points
                .iter()
                .enumerate()
                .map(|(k, (p, r))| Sample {
                    time: k as f64 * dt,
                    agent: 1,
                    position: *p,
                    velocity: Vector3::zeros(),
                    reference: *r,
                })
                .collect(),
            leader_yaw: vec![],
        }
    }

    fn ramp(n: usize) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        (0..n)
            .map(|k| {
                let r = Vector3::new(0.01 * k as f64, 0.0, 1.0);
                (r + Vector3::new(0.0, 0.001 * k as f64, 0.0), r)
            })
            .collect()
    }

    #[test]
    fn zero_and_constant_error() {
        let pts: Vec<_> = (0..10)
            .map(|k| {
                (
                    Vector3::new(k as f64, 0.0, 0.0),
                    Vector3::new(k as f64, 0.0, 0.0),
                )
            })
            .collect();
        let log = log_from(&pts, 0.1);
        assert_eq!(rmse_and_max(&log, 1).unwrap(), (0.0, 0.0));
        let e = per_axis_error(&log, 1).unwrap();
        assert_eq!((e.mean_x, e.max_x, e.mean_y, e.max_y), (0.0, 0.0, 0.0, 0.0));
        let shifted: Vec<_> = pts
            .iter()
            .map(|(p, r)| (p + Vector3::new(0.1, 0.0, 0.0), *r))
            .collect();
        let e = per_axis_error(&log_from(&shifted, 0.1), 1).unwrap();
        assert!((e.mean_x - 0.1).abs() < 1e-12 && (e.max_x - 0.1).abs() < 1e-12);
        assert_eq!((e.mean_y, e.max_y), (0.0, 0.0));
    }

    #[test]
    fn alternating_error_rmse() {
        let pts: Vec<_> = (0..100)
            .map(|k| {
                let s = if k % 2 == 0 { 0.02 } else { -0.02 };
                (Vector3::new(s, 0.0, 0.0), Vector3::zeros())
            })
            .collect();
        let (rmse, max) = rmse_and_max(&log_from(&pts, 0.1), 1).unwrap();
        assert!((rmse - 0.02).abs() < 1e-15 && (max - 0.02).abs() < 1e-15);
    }

    #[test]
    fn ramp_error_matches_closed_form() {
        // e_k = 0.001 k for k = 0..n-1: sum e^2 = 1e-6 (n-1) n (2n-1) / 6.
        let n = 200;
        let log = log_from(&ramp(n), 0.1);
        let (rmse, max) = rmse_and_max(&log, 1).unwrap();
        let nf = n as f64;
        let expect = (1e-6 * (nf - 1.0) * nf * (2.0 * nf - 1.0) / 6.0 / nf).sqrt();
        assert!((rmse - expect).abs() < 1e-12);
        assert!((max - 0.001 * (nf - 1.0)).abs() < 1e-12);
        let e = per_axis_error(&log, 1).unwrap();
        assert!((e.mean_y - 0.001 * (nf - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn crosstrack_examples() {
        let a = Vector3::zeros();
        let b = Vector3::new(1.0, 0.0, 0.0);
        let on: Vec<_> = (0..10)
            .map(|k| (Vector3::new(0.1 * k as f64, 0.0, 0.5), Vector3::zeros()))
            .collect();
        assert_eq!(
            crosstrack(&log_from(&on, 0.1), 1, &a, &b).unwrap(),
            (0.0, 0.0)
        );
        let mut off = on.clone();
        off[4].0.y = 0.05;
        let (_, max) = crosstrack(&log_from(&off, 0.1), 1, &a, &b).unwrap();
        assert!(max >= 0.05 - 1e-15);
        assert_eq!(
            crosstrack(&log_from(&on, 0.1), 1, &a, &a),
            Err(AnalysisError::DegenerateSegment)
        );
    }

    #[test]
    fn speed_examples() {
        let still: Vec<_> = (0..5)
            .map(|_| (Vector3::new(1.0, 2.0, 3.0), Vector3::zeros()))
            .collect();
        assert_eq!(
            velocity_stats(&log_from(&still, 0.1), 1).unwrap(),
            (0.0, 0.0)
        );
        let moving: Vec<_> = (0..50)
            .map(|k| {
                (
                    Vector3::new(0.18 * 0.025 * k as f64, 0.0, 0.0),
                    Vector3::zeros(),
                )
            })
            .collect();
        let (mean, max) = velocity_stats(&log_from(&moving, 0.025), 1).unwrap();
        assert!((mean - 0.18).abs() < 1e-12 && (max - 0.18).abs() < 1e-12);
        assert!(matches!(
            velocity_stats(&log_from(&moving[..1], 0.025), 1),
            Err(AnalysisError::TooFewSamples { .. })
        ));
        assert!(matches!(
            rmse_and_max(&TrajectoryLog::default(), 1),
            Err(AnalysisError::Empty { .. })
        ));
    }

    #[test]
    fn pooled_rmse_is_sample_weighted() {
        let a = ramp(30);
        let b: Vec<_> = ramp(70)
            .into_iter()
            .map(|(p, r)| (p * 2.0 - r, r))
            .collect();
        let ra = rmse_and_max(&log_from(&a, 0.1), 1).unwrap().0;
        let rb = rmse_and_max(&log_from(&b, 0.1), 1).unwrap().0;
        let all: Vec<_> = a.iter().chain(&b).copied().collect();
        let r = rmse_and_max(&log_from(&all, 0.1), 1).unwrap().0;
        assert!((combine_rmse(&[(ra, 30), (rb, 70)]) - r).abs() < 1e-14);
    }

    #[test]
    fn yaw_std_examples() {
        assert_eq!(yaw_std_deg(&[]), None);
        assert!(yaw_std_deg(&[0.3; 10]).unwrap() < 1e-12);
        let s = yaw_std_deg(&[-0.1, 0.1]).unwrap();
        assert!((s - 0.1f64.to_degrees()).abs() < 1e-12);
    }

    fn transform(
        pts: &[(Vector3<f64>, Vector3<f64>)],
        angle: f64,
        shift: Vector3<f64>,
    ) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        pts.iter()
            .map(|(p, r)| (rot * p + shift, rot * r + shift))
            .collect()
    }

    proptest! {
        #[test]
        fn rigid_motion_invariance(angle in -3.0f64..3.0, sx in -5.0f64..5.0, sy in -5.0f64..5.0, wobble in 0.0f64..0.05) {
            let pts: Vec<_> = (0..60)
                .map(|k| {
                    let r = Vector3::new(0.02 * k as f64, 0.0, 1.0);
                    (r + Vector3::new(0.0, wobble * (k as f64 * 0.4).sin(), 0.0), r)
                })
                .collect();
            let base = log_from(&pts, 0.05);
            let moved = log_from(&transform(&pts, angle, Vector3::new(sx, sy, 0.0)), 0.05);
            let (r0, m0) = rmse_and_max(&base, 1).unwrap();
            let (r1, m1) = rmse_and_max(&moved, 1).unwrap();
            prop_assert!((r0 - r1).abs() < 1e-12 && (m0 - m1).abs() < 1e-12);
            let (v0, _) = velocity_stats(&base, 1).unwrap();
            let (v1, _) = velocity_stats(&moved, 1).unwrap();
            prop_assert!((v0 - v1).abs() < 1e-9);
            let (a0, b0) = straight_reference(&base, 1).unwrap();
            let (a1, b1) = straight_reference(&moved, 1).unwrap();
            let c0 = crosstrack(&base, 1, &a0, &b0).unwrap();
            let c1 = crosstrack(&moved, 1, &a1, &b1).unwrap();
            prop_assert!((c0.0 - c1.0).abs() < 1e-12 && (c0.1 - c1.1).abs() < 1e-12);
            // Per-axis errors are translation invariant.
            let shifted = log_from(&transform(&pts, 0.0, Vector3::new(sx, sy, 0.0)), 0.05);
            let e0 = per_axis_error(&base, 1).unwrap();
            let e1 = per_axis_error(&shifted, 1).unwrap();
            prop_assert!((e0.mean_y - e1.mean_y).abs() < 1e-12 && (e0.max_x - e1.max_x).abs() < 1e-12);
        }
    }
}
