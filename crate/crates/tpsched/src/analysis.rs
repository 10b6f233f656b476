//! Per-resource schedule times, bottleneck identification and steady-state
//! throughput prediction: TP = 1 / max schedule time.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    transfer_time, Cluster, ExecutionMatrix, Resource, Schedule, TaskGraph,
};

/// Busy time of each resource within one steady-state period. Every cluster
/// node is present (possibly zero); links appear once they carry traffic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResourceTimes {
    pub times: BTreeMap<Resource, f64>,
}

impl ResourceTimes {
    pub fn node_time(&self, node: &crate::model::NodeId) -> f64 {
        self.times
            .get(&Resource::Node(node.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn link_time(&self, src: &crate::model::NodeId, dst: &crate::model::NodeId) -> f64 {
        self.times
            .get(&Resource::Link(src.clone(), dst.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn max_time(&self) -> f64 {
        self.times.values().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputEstimate {
    pub max_schedule_time: f64,
    pub bottleneck: Resource,
    /// Instances per second; exactly `1 / max_schedule_time`.
    pub throughput: f64,
}

/// Per-resource schedule times of a (possibly split) schedule.
///
/// A node accumulates `portion * exec` for each replica placed on it. A
/// directed link accumulates, for every scheduled parent-replica to
/// child-replica flow routed across it, the flow fraction times the file
/// transfer time; the fraction from a parent replica with portion `pp` to a
/// child replica with portion `pc` is `pp * pc`. Intra-node flows are free.
pub fn resource_times(
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
) -> Result<ResourceTimes> {
    let mut times: BTreeMap<Resource, f64> = cluster
        .nodes
        .iter()
        .map(|n| (Resource::Node(n.clone()), 0.0))
        .collect();

    for (task, placements) in &schedule.assignment {
        for p in placements {
            if !cluster.nodes.contains(&p.node) {
                return Err(Error::UnknownNode(p.node.clone()));
            }
            let t = exec.get(task, &p.node)?;
            *times.get_mut(&Resource::Node(p.node.clone())).unwrap() += p.portion * t;
        }
    }

    for ((parent, child), &size) in &graph.edges {
        let pps = schedule.placements(parent)?;
        let cps = schedule.placements(child)?;
        for pp in pps {
            for cp in cps {
                if pp.node == cp.node {
                    continue;
                }
                let profile = cluster.link(&pp.node, &cp.node)?;
                let t = transfer_time(profile, size)?;
                *times
                    .entry(Resource::Link(pp.node.clone(), cp.node.clone()))
                    .or_insert(0.0) += pp.portion * cp.portion * t;
            }
        }
    }

    Ok(ResourceTimes { times })
}

/// Resource with the largest schedule time. Ties prefer nodes over links,
/// then lexicographic id; both fall out of the `Resource` ordering, so a
/// strict-greater scan over the sorted map implements the tie rule.
pub fn bottleneck(times: &ResourceTimes) -> Option<(Resource, f64)> {
    let mut best: Option<(&Resource, f64)> = None;
    for (r, &t) in &times.times {
        match best {
            Some((_, bt)) if t <= bt => {}
            _ => best = Some((r, t)),
        }
    }
    best.map(|(r, t)| (r.clone(), t))
}

pub fn predicted_throughput(times: &ResourceTimes) -> Result<ThroughputEstimate> {
    let (resource, max) = bottleneck(times).ok_or(Error::EmptySchedule)?;
    if max <= 0.0 {
        return Err(Error::EmptySchedule);
    }
    Ok(ThroughputEstimate {
        max_schedule_time: max,
        bottleneck: resource,
        throughput: 1.0 / max,
    })
}

#[cfg(test)]
pub(crate) use tests::ref_diamond;
