//! Task duplication: relieve a bottleneck link by duplicating the tasks
//! feeding it onto an idle node and rewiring the DAG so the duplicate serves
//! the far side of the link.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{bottleneck, resource_times, ResourceTimes};
use crate::error::{Error, Result};
use crate::model::{
    transfer_time, Cluster, ExecutionMatrix, NodeId, Placement, Resource, Schedule, TaskGraph,
    TaskId,
};

/// One duplication step over bottleneck link `src_node -> dst_node`:
/// every task in `src_tasks` gains a copy on `target_node`, and the copies
/// take over the edges into children hosted on `dst_node`.
#[derive(Debug, Clone, PartialEq)]
pub struct DupDecision {
    pub src_node: NodeId,
    pub dst_node: NodeId,
    pub target_node: NodeId,
    pub src_tasks: Vec<TaskId>,
    /// Effected max schedule time at the target after hosting the copies.
    pub predicted_target_time: f64,
}

#[derive(Debug, Clone)]
pub struct DupRound {
    pub decision: DupDecision,
    pub predicted_max_before: f64,
    pub predicted_max_after: f64,
}

#[derive(Debug, Clone)]
pub struct DupOutcome {
    pub graph: TaskGraph,
    pub schedule: Schedule,
    pub rounds: Vec<DupRound>,
}

/// Tasks on `src` with at least one child on `dst` — the senders that load
/// the bottleneck link. Requires an unsplit schedule.
fn src_tasks_of_link(
    src: &NodeId,
    dst: &NodeId,
    schedule: &Schedule,
    graph: &TaskGraph,
) -> Result<Vec<TaskId>> {
    let mut out = Vec::new();
    for task in schedule.assignment.keys() {
        if schedule.sole_node(task)? != src {
            continue;
        }
        for (child, _) in graph.children(task) {
            if schedule.sole_node(child)? == dst {
                out.push(task.clone());
                break;
            }
        }
    }
    Ok(out)
}

/// Evaluate every candidate as a host for copies of `src_tasks` and return
/// the one with the smallest effected max, provided that max beats
/// `btnk_time`. The effected max counts the candidate's execution load, the
/// parent files it would newly receive, and the rewired files it would send
/// to children on `dst`.
#[allow(clippy::too_many_arguments)]
pub fn find_best_dup_node(
    times: &ResourceTimes,
    src_tasks: &[TaskId],
    dst: &NodeId,
    btnk_time: f64,
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    candidates: &BTreeSet<NodeId>,
) -> Result<Option<(NodeId, f64)>> {
    let mut best: Option<(NodeId, f64)> = None;
    for cand in candidates {
        let mut node_time = 0.0;
        let mut increments: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for task in src_tasks {
            node_time += exec.get(task, cand)?;
            for (parent, size) in graph.parents(task) {
                let pn = schedule.sole_node(parent)?;
                if pn != cand {
                    let t = transfer_time(cluster.link(pn, cand)?, size)?;
                    *increments.entry((pn.clone(), cand.clone())).or_insert(0.0) += t;
                }
            }
            for (child, size) in graph.children(task) {
                if schedule.sole_node(child)? == dst && dst != cand {
                    let t = transfer_time(cluster.link(cand, dst)?, size)?;
                    *increments.entry((cand.clone(), dst.clone())).or_insert(0.0) += t;
                }
            }
        }
        let mut t_cand = times.node_time(cand) + node_time;
        for (lk, inc) in increments {
            t_cand = t_cand.max(times.link_time(&lk.0, &lk.1) + inc);
        }
        match &best {
            Some((_, bt)) if t_cand >= *bt => {}
            _ => best = Some((cand.clone(), t_cand)),
        }
    }
    Ok(best.filter(|(_, t)| *t < btnk_time))
}

fn fresh_dup_name(graph: &TaskGraph, base: &TaskId) -> TaskId {
    let mut name = format!("{}-dup", base.0);
    while graph.tasks.contains(&TaskId(name.clone())) {
        name.push_str("-dup");
    }
    TaskId(name)
}

/// Rewrite graph and schedule for one decision: add the duplicate tasks on
/// the target node, copy every parent edge onto them, and move each
/// `src_task -> child-on-dst` edge to the duplicate. The rewritten graph is
/// checked for cycles and exit reachability.
pub fn apply_duplication(
    graph: &TaskGraph,
    schedule: &Schedule,
    decision: &DupDecision,
) -> Result<(TaskGraph, Schedule)> {
    let mut g = graph.clone();
    let mut s = schedule.clone();
    for task in &decision.src_tasks {
        let dup = fresh_dup_name(&g, task);
        g.tasks.insert(dup.clone());
        let parents: Vec<(TaskId, u64)> =
            g.parents(task).map(|(p, sz)| (p.clone(), sz)).collect();
        for (p, sz) in parents {
            g.edges.insert((p, dup.clone()), sz);
        }
        let moved: Vec<(TaskId, u64)> = g
            .children(task)
            .filter(|(c, _)| {
                schedule
                    .sole_node(c)
                    .map(|n| n == &decision.dst_node)
                    .unwrap_or(false)
            })
            .map(|(c, sz)| (c.clone(), sz))
            .collect();
        for (c, sz) in moved {
            g.edges.remove(&(task.clone(), c.clone()));
            g.edges.insert((dup.clone(), c), sz);
        }
        s.assignment.insert(
            dup,
            vec![Placement { node: decision.target_node.clone(), portion: 1.0 }],
        );
    }
    g.topo_order()?;
    garbage_collect_zombies(&mut g, &mut s)?;
    Ok((g, s))
}

/// Drop tasks with no remaining path to the exit (and their edges and
/// placements). Errors if the rewrite left the exit unreachable from the
/// entry.
pub fn garbage_collect_zombies(graph: &mut TaskGraph, schedule: &mut Schedule) -> Result<()> {
    if !graph.reachable_from_entry().contains(&graph.exit_task) {
        return Err(Error::CorruptRewrite);
    }
    let live = graph.can_reach_exit();
    graph.tasks.retain(|t| live.contains(t));
    graph
        .edges
        .retain(|(p, c), _| live.contains(p) && live.contains(c));
    schedule.assignment.retain(|t, _| live.contains(t));
    Ok(())
}

/// Repeat duplication while the bottleneck is a link, its sender set is
/// duplicable (non-empty, excludes the entry task), a candidate beats the
/// bottleneck time, and the rewrite strictly lowers the predicted system
/// max.
pub fn iterate_dup(
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    max_rounds: usize,
) -> Result<DupOutcome> {
    if !schedule.is_unsplit() {
        if let Some(task) = schedule
            .assignment
            .iter()
            .find(|(_, ps)| ps.len() != 1)
            .map(|(t, _)| t)
        {
            return Err(Error::SplitScheduleUnsupported(task.clone()));
        }
    }
    let mut g = graph.clone();
    let mut s = schedule.clone();
    let mut rounds = Vec::new();
    for _ in 0..max_rounds {
        let times = resource_times(&s, &g, cluster, exec)?;
        let Some((Resource::Link(src, dst), btnk_time)) = bottleneck(&times) else {
            break;
        };
        let src_tasks = src_tasks_of_link(&src, &dst, &s, &g)?;
        if src_tasks.is_empty() || src_tasks.contains(&g.entry_task) {
            break;
        }
        let candidates = s.idle_nodes(cluster);
        let Some((target, t)) = find_best_dup_node(
            &times, &src_tasks, &dst, btnk_time, &s, &g, cluster, exec, &candidates,
        )?
        else {
            break;
        };
        let decision = DupDecision {
            src_node: src,
            dst_node: dst,
            target_node: target,
            src_tasks,
            predicted_target_time: t,
        };
        let (ng, ns) = apply_duplication(&g, &s, &decision)?;
        let after = resource_times(&ns, &ng, cluster, exec)?.max_time();
        if after >= times.max_time() - 1e-12 {
            break;
        }
        rounds.push(DupRound {
            decision,
            predicted_max_before: times.max_time(),
            predicted_max_after: after,
        });
        g = ng;
        s = ns;
    }
    Ok(DupOutcome { graph: g, schedule: s, rounds })
}
