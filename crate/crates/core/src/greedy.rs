//! Greedy adaptive routing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::faults::FaultSet;
use crate::topology::{DistanceMode, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteStatus {
    Success,
    /// No admissible next hop (greedy) or the packet entered a faulty node (RL).
    Stuck,
    MaxHopsExceeded,
}

impl RouteStatus {
    pub fn label(self) -> &'static str {
        match self {
            RouteStatus::Success => "success",
            RouteStatus::Stuck => "stuck",
            RouteStatus::MaxHopsExceeded => "max_hops_exceeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteResult {
    /// Visited nodes starting at the source.
    pub path: Vec<usize>,
    pub status: RouteStatus,
    /// Hop count on success, −1 otherwise.
    pub hops: i64,
}

impl RouteResult {
    pub fn delivered(&self) -> bool {
        self.status == RouteStatus::Success
    }

    pub fn delivered_hops(&self) -> Option<usize> {
        self.delivered().then_some(self.hops as usize)
    }

    pub(crate) fn success(path: Vec<usize>) -> Self {
        let hops = path.len() as i64 - 1;
        Self {
            path,
            status: RouteStatus::Success,
            hops,
        }
    }

    pub(crate) fn failure(path: Vec<usize>, status: RouteStatus) -> Self {
        Self {
            path,
            status,
            hops: -1,
        }
    }
}

pub(crate) fn check_endpoints(
    t: &Topology,
    src: usize,
    dst: usize,
    faults: &FaultSet,
) -> Result<()> {
    t.check_node(src)?;
    t.check_node(dst)?;
    for end in [src, dst] {
        if faults.contains(end) {
            return Err(Error::FaultyEndpoint(end));
        }
    }
    Ok(())
}

/// Forward to the unvisited, non-faulty neighbor closest to `dst`.
///
/// Visited nodes are never re-entered. The packet is dropped as
/// [`RouteStatus::Stuck`] when no admissible neighbor remains and as
/// [`RouteStatus::MaxHopsExceeded`] after `2N` hops. Distance ties go to the
/// smallest node index.
pub fn route_greedy(
    t: &Topology,
    src: usize,
    dst: usize,
    faults: &FaultSet,
    mode: DistanceMode,
) -> Result<RouteResult> {
    check_endpoints(t, src, dst, faults)?;
    let max_hops = t.max_hops();
    let mut visited = vec![false; t.len()];
    visited[src] = true;
    let mut path = vec![src];
    let mut current = src;
    while current != dst && path.len() - 1 < max_hops {
        let next = t
            .neighbors(current)
            .iter()
            .copied()
            .filter(|&n| !faults.contains(n) && !visited[n])
            .min_by_key(|&n| (t.euclid_dist2(n, dst, mode), n));
        let Some(next) = next else {
            return Ok(RouteResult::failure(path, RouteStatus::Stuck));
        };
        current = next;
        visited[current] = true;
        path.push(current);
    }
    if current == dst {
        Ok(RouteResult::success(path))
    } else {
        Ok(RouteResult::failure(path, RouteStatus::MaxHopsExceeded))
    }
}
