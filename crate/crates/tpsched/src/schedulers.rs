//! Baseline one-task-one-node schedulers: classic insertion-based HEFT
//! (makespan baseline) and the throughput-oriented variant that minimizes
//! the max schedule time over effected resources at each assignment.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{
    rank_order, transfer_time, upward_rank, validate, Cluster, ExecutionMatrix, NodeId, Schedule,
    TaskGraph, TaskId,
};

/// Classic HEFT: tasks in descending upward rank, each assigned to the node
/// minimizing its earliest finish time, with insertion-based gap filling.
/// Communication from a parent on the same node is free.
pub fn heft_schedule(
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
) -> Result<Schedule> {
    validate(graph, cluster, exec).into_result()?;
    let ranks = upward_rank(graph, cluster, exec)?;
    let order = rank_order(&ranks);

    // Per node: sorted busy intervals. Per task: (node, actual finish time).
    let mut busy: BTreeMap<NodeId, Vec<(f64, f64)>> = BTreeMap::new();
    let mut placed: BTreeMap<TaskId, (NodeId, f64)> = BTreeMap::new();

    for task in &order {
        let mut best: Option<(NodeId, f64, f64)> = None; // (node, start, finish)
        for node in &cluster.nodes {
            let mut est = 0.0f64;
            for (parent, size) in graph.parents(task) {
                let (pnode, pfin) = &placed[parent];
                let comm = if pnode == node {
                    0.0
                } else {
                    transfer_time(cluster.link(pnode, node)?, size)?
                };
                est = est.max(pfin + comm);
            }
            let dur = exec.get(task, node)?;
            let start = earliest_slot(busy.get(node).map(|v| v.as_slice()).unwrap_or(&[]), est, dur);
            let finish = start + dur;
            match &best {
                Some((_, _, bf)) if finish >= *bf => {}
                _ => best = Some((node.clone(), start, finish)),
            }
        }
        let (node, start, finish) = best.expect("non-empty cluster");
        let intervals = busy.entry(node.clone()).or_default();
        let pos = intervals.partition_point(|&(s, _)| s < start);
        intervals.insert(pos, (start, finish));
        placed.insert(task.clone(), (node, finish));
    }

    let map: BTreeMap<TaskId, NodeId> = placed.into_iter().map(|(t, (n, _))| (t, n)).collect();
    Ok(Schedule::from_map(&map))
}

/// Earliest start >= `est` of a gap of length `dur` in sorted busy intervals.
fn earliest_slot(intervals: &[(f64, f64)], est: f64, dur: f64) -> f64 {
    let mut candidate = est;
    for &(s, e) in intervals {
        if candidate + dur <= s {
            return candidate;
        }
        candidate = candidate.max(e);
    }
    candidate
}

/// Throughput HEFT: the entry task goes to its min-exec node; every other
/// task, in descending upward rank, goes to the node minimizing the max
/// schedule time over the resources its assignment effects (the candidate
/// node plus each parent-node-to-candidate link). Ties break to the
/// lexicographically smaller node id.
pub fn tpheft_schedule(
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
) -> Result<Schedule> {
    validate(graph, cluster, exec).into_result()?;
    let ranks = upward_rank(graph, cluster, exec)?;
    let order = rank_order(&ranks);

    let mut node_time: BTreeMap<NodeId, f64> =
        cluster.nodes.iter().map(|n| (n.clone(), 0.0)).collect();
    let mut link_time: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut placed: BTreeMap<TaskId, NodeId> = BTreeMap::new();

    for task in &order {
        let node = if *task == graph.entry_task {
            cluster
                .nodes
                .iter()
                .min_by(|a, b| {
                    exec.get(task, a)
                        .unwrap()
                        .total_cmp(&exec.get(task, b).unwrap())
                })
                .expect("non-empty cluster")
                .clone()
        } else {
            let mut best: Option<(NodeId, f64)> = None;
            for cand in &cluster.nodes {
                let effected_max = effected_max_for(
                    task, cand, graph, cluster, exec, &node_time, &link_time, &placed,
                )?;
                match &best {
                    Some((_, bm)) if effected_max >= *bm => {}
                    _ => best = Some((cand.clone(), effected_max)),
                }
            }
            best.expect("non-empty cluster").0
        };

        *node_time.get_mut(&node).unwrap() += exec.get(task, &node)?;
        for (parent, size) in graph.parents(task) {
            let pnode = &placed[parent];
            if *pnode != node {
                let t = transfer_time(cluster.link(pnode, &node)?, size)?;
                *link_time.entry((pnode.clone(), node.clone())).or_insert(0.0) += t;
            }
        }
        placed.insert(task.clone(), node);
    }

    Ok(Schedule::from_map(&placed))
}

#[allow(clippy::too_many_arguments)]
fn effected_max_for(
    task: &TaskId,
    cand: &NodeId,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    node_time: &BTreeMap<NodeId, f64>,
    link_time: &BTreeMap<(NodeId, NodeId), f64>,
    placed: &BTreeMap<TaskId, NodeId>,
) -> Result<f64> {
    let mut max = node_time[cand] + exec.get(task, cand)?;
    let mut increments: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    for (parent, size) in graph.parents(task) {
        let pnode = &placed[parent];
        if pnode != cand {
            let t = transfer_time(cluster.link(pnode, cand)?, size)?;
            *increments.entry((pnode.clone(), cand.clone())).or_insert(0.0) += t;
        }
    }
    for (lk, inc) in increments {
        let total = link_time.get(&lk).copied().unwrap_or(0.0) + inc;
        max = max.max(total);
    }
    Ok(max)
}

/// MANUAL scheduler: a user-provided task -> node map, validated for totality.
pub fn manual_schedule(
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    map: &BTreeMap<TaskId, NodeId>,
) -> Result<Schedule> {
    validate(graph, cluster, exec).into_result()?;
    for t in &graph.tasks {
        let node = map
            .get(t)
            .ok_or_else(|| crate::error::Error::UnknownTask(t.clone()))?;
        if !cluster.nodes.contains(node) {
            return Err(crate::error::Error::UnknownNode(node.clone()));
        }
    }
    Ok(Schedule::from_map(map))
}
