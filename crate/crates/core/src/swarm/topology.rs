use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SwarmError;

pub const LEADER: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Star,
    Ring,
    Tree,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 3] = [TopologyKind::Star, TopologyKind::Ring, TopologyKind::Tree];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Star => "star",
            TopologyKind::Ring => "ring",
            TopologyKind::Tree => "tree",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "star" => Ok(TopologyKind::Star),
            "ring" => Ok(TopologyKind::Ring),
            "tree" => Ok(TopologyKind::Tree),
            other => Err(format!(
                "unknown topology '{other}' (expected star, ring or tree)"
            )),
        }
    }
}

/// An impedance link between two agents. `rest_offset` is the resting
/// displacement `position(b) - position(a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub rest_offset: Vector3<f64>,
    pub leader_coupled: bool,
}

impl Link {
    pub fn other(&self, agent: usize) -> Option<usize> {
        if self.a == agent {
            Some(self.b)
        } else if self.b == agent {
            Some(self.a)
        } else {
            None
        }
    }
}

/// Agent 0 is the leader; followers are `1..=n_followers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyGraph {
    pub kind: TopologyKind,
    /// Formation slot of each follower relative to the leader.
    pub offsets: Vec<Vector3<f64>>,
    pub links: Vec<Link>,
}

impl TopologyGraph {
    pub fn n_followers(&self) -> usize {
        self.offsets.len()
    }

    pub fn n_agents(&self) -> usize {
        self.offsets.len() + 1
    }

    /// Slot of `agent` relative to the leader (zero for the leader itself).
    pub fn slot(&self, agent: usize) -> Vector3<f64> {
        if agent == LEADER {
            Vector3::zeros()
        } else {
            self.offsets[agent - 1]
        }
    }

    pub fn incident(&self, agent: usize) -> impl Iterator<Item = &Link> + '_ {
        self.links
            .iter()
            .filter(move |l| l.a == agent || l.b == agent)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_agents();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([LEADER]);
        seen[LEADER] = true;
        while let Some(v) = queue.pop_front() {
            for l in self.incident(v) {
                let w = l.other(v).unwrap();
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

pub fn build_topology(
    kind: TopologyKind,
    n_followers: usize,
    offsets: &[Vector3<f64>],
) -> Result<TopologyGraph, SwarmError> {
    if n_followers == 0 {
        return Err(SwarmError::InvalidCount {
            kind,
            n: n_followers,
            reason: "at least one follower is required",
        });
    }
    if kind == TopologyKind::Ring && n_followers < 2 {
        return Err(SwarmError::InvalidCount {
            kind,
            n: n_followers,
            reason: "a ring needs at least two followers",
        });
    }
    if offsets.len() != n_followers {
        return Err(SwarmError::OffsetMismatch {
            expected: n_followers,
            got: offsets.len(),
        });
    }
    let slot = |i: usize| {
        if i == LEADER {
            Vector3::zeros()
        } else {
            offsets[i - 1]
        }
    };
    let link = |a: usize, b: usize| Link {
        a,
        b,
        rest_offset: slot(b) - slot(a),
        leader_coupled: a == LEADER || b == LEADER,
    };
    let links = match kind {
        TopologyKind::Star => (1..=n_followers).map(|i| link(LEADER, i)).collect(),
        TopologyKind::Ring => (0..=n_followers)
            .map(|i| link(i, (i + 1) % (n_followers + 1)))
            .collect(),
        // Binary branching in breadth-first order below the leader.
        TopologyKind::Tree => (1..=n_followers).map(|i| link((i - 1) / 2, i)).collect(),
    };
    let graph = TopologyGraph {
        kind,
        offsets: offsets.to_vec(),
        links,
    };
    debug_assert!(graph.is_connected());
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offsets(n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|i| Vector3::new(-0.5 * (i + 1) as f64, 0.3, 1.0))
            .collect()
    }

    #[test]
    fn star_links_everyone_to_leader() {
        let g = build_topology(TopologyKind::Star, 3, &offsets(3)).unwrap();
        assert_eq!(g.links.len(), 3);
        assert!(g.links.iter().all(|l| l.leader_coupled && l.a == LEADER));
        assert!(g.is_connected());
    }

    #[test]
    fn ring_is_one_cycle() {
        let g = build_topology(TopologyKind::Ring, 3, &offsets(3)).unwrap();
        assert_eq!(g.links.len(), 4);
        for agent in 0..4 {
            assert_eq!(g.incident(agent).count(), 2);
        }
        assert!(g.is_connected());
        assert!(build_topology(TopologyKind::Ring, 1, &offsets(1)).is_err());
    }

    #[test]
    fn tree_branches_and_degenerates_to_star() {
        let g = build_topology(TopologyKind::Tree, 1, &offsets(1)).unwrap();
        let s = build_topology(TopologyKind::Star, 1, &offsets(1)).unwrap();
        assert_eq!(g.links, s.links);
        let g = build_topology(TopologyKind::Tree, 6, &offsets(6)).unwrap();
        assert_eq!(g.links.len(), 6);
        assert_eq!(g.incident(LEADER).count(), 2);
        assert!(g.is_connected());
    }

    #[test]
    fn rest_offsets_match_slots() {
        for kind in TopologyKind::ALL {
            let g = build_topology(kind, 4, &offsets(4)).unwrap();
            for l in &g.links {
                assert_eq!(l.rest_offset, g.slot(l.b) - g.slot(l.a));
            }
        }
    }

    #[test]
    fn rejects_bad_counts() {
        assert!(build_topology(TopologyKind::Star, 0, &[]).is_err());
        assert!(matches!(
            build_topology(TopologyKind::Star, 2, &offsets(3)),
            Err(SwarmError::OffsetMismatch { .. })
        ));
        assert_eq!("Ring".parse::<TopologyKind>(), Ok(TopologyKind::Ring));
        assert!("mesh".parse::<TopologyKind>().is_err());
    }
}
