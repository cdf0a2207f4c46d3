use std::io::{self, Read, Write};

use nalgebra::Vector3;
use thiserror::Error;

pub const TRAJECTORY_CSV_HEADER: &str =
    "time_s,agent_id,x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,ref_x,ref_y,ref_z";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed trajectory log: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trajectory log at record {record}: {reason}")]
    Malformed { record: usize, reason: String },
    #[error("trajectory log is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub agent: usize,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub reference: Vector3<f64>,
}

/// Per-tick agent states in tick-major order. Agent 0 is the leader.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Leader body yaw per tick, rad. Not part of the CSV schema.
    pub leader_yaw: Vec<f64>,
}

impl TrajectoryLog {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sorted distinct agent ids.
    pub fn agents(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.samples.iter().map(|s| s.agent).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn agent_samples(&self, agent: usize) -> impl Iterator<Item = &Sample> + '_ {
        self.samples.iter().filter(move |s| s.agent == agent)
    }

    pub fn ticks(&self) -> usize {
        self.agent_samples(0).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                out,
                "{:.9},{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}",
                s.time,
                s.agent,
                s.position.x,
                s.position.y,
                s.position.z,
                s.velocity.x,
                s.velocity.y,
                s.velocity.z,
                s.reference.x,
                s.reference.y,
                s.reference.z
            )?;
        }
        Ok(())
    }

    /// Reads a log written by [`write_csv`](Self::write_csv); `#` lines are skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, LogError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader.headers()?.clone();
        let expected: Vec<&str> = TRAJECTORY_CSV_HEADER.split(',').collect();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(LogError::Malformed {
                record: 0,
                reason: format!("expected header '{TRAJECTORY_CSV_HEADER}'"),
            });
        }
        let mut samples = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64, LogError> {
                rec[i].parse::<f64>().map_err(|e| LogError::Malformed {
                    record: k + 1,
                    reason: format!("column {}: {e}", expected[i]),
                })
            };
            let agent = rec[1].parse::<usize>().map_err(|e| LogError::Malformed {
                record: k + 1,
                reason: format!("agent_id: {e}"),
            })?;
            samples.push(Sample {
                time: num(0)?,
                agent,
                position: Vector3::new(num(2)?, num(3)?, num(4)?),
                velocity: Vector3::new(num(5)?, num(6)?, num(7)?),
                reference: Vector3::new(num(8)?, num(9)?, num(10)?),
            });
        }
        if samples.is_empty() {
            return Err(LogError::Empty);
        }
        let times: Vec<f64> = samples
            .iter()
            .filter(|s| s.agent == samples[0].agent)
            .map(|s| s.time)
            .collect();
        let dt = if times.len() > 1 {
            times[1] - times[0]
        } else {
            0.0
        };
        Ok(Self {
            dt,
            samples,
            leader_yaw: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let log = TrajectoryLog {
            dt: 0.025,
            samples: (0..4)
                .flat_map(|k| {
                    (0..2).map(move |a| Sample {
                        time: k as f64 * 0.025,
                        agent: a,
                        position: Vector3::new(k as f64 * 0.1, a as f64, 1.0),
                        velocity: Vector3::new(4.0, 0.0, 0.0),
                        reference: Vector3::new(k as f64 * 0.1, 0.0, 1.0),
                    })
                })
                .collect(),
            leader_yaw: vec![],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf, Some("config_hash=abc")).unwrap();
        let back = TrajectoryLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples.len(), 8);
        assert_eq!(back.agents(), vec![0, 1]);
        assert!((back.dt - 0.025).abs() < 1e-12);
        for (a, b) in log.samples.iter().zip(&back.samples) {
            assert!((a.position - b.position).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TrajectoryLog::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let empty = format!("{TRAJECTORY_CSV_HEADER}\n");
        assert!(matches!(
            TrajectoryLog::read_csv(empty.as_bytes()),
            Err(LogError::Empty)
        ));
        let bad = format!("{TRAJECTORY_CSV_HEADER}\n0,0,x,0,0,0,0,0,0,0,0\n");
        assert!(matches!(
            TrajectoryLog::read_csv(bad.as_bytes()),
            Err(LogError::Malformed { record: 1, .. })
        ));
    }
}
