//! Node splitting: improve a schedule's throughput by repeatedly splitting
//! the bottleneck node's task set onto an idle node with an equalizing
//! portion, plus the replica-routing rules used at run time.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::analysis::{bottleneck, resource_times, ResourceTimes};
use crate::error::{Error, Result};
use crate::model::{
    transfer_time, Cluster, ExecutionMatrix, NodeId, Placement, Resource, Schedule, TaskGraph,
};

/// One split step: move `portion` of every task replica on `source_node`
/// onto `target_node`. The portion equalizes the predicted source time with
/// the target's effected max: `(1 - ptn) * btnkTime = ptn * T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDecision {
    pub source_node: NodeId,
    pub target_node: NodeId,
    pub portion: f64,
    pub predicted_source_time: f64,
    pub predicted_target_time: f64,
}

#[derive(Debug, Clone)]
pub struct SplitRound {
    pub decision: SplitDecision,
    pub predicted_max_before: f64,
    pub predicted_max_after: f64,
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub schedule: Schedule,
    pub rounds: Vec<SplitRound>,
}

/// How a parent picks a child replica for one input instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutingMode {
    /// Single-parent children: seeded draw from the replica portions.
    Probability,
    /// Multi-parent children: deterministic hash of the instance id, so all
    /// parent files of one instance land on the same replica.
    Hash,
}

/// Pick a replica index for one instance. Hash mode parses the decimal
/// instance id and reduces it modulo the replica count; probability mode
/// draws from the portion distribution using the supplied generator.
pub fn choose_replica<R: Rng + ?Sized>(
    replicas: &[Placement],
    instance_id: &str,
    mode: RoutingMode,
    rng: &mut R,
) -> Result<usize> {
    debug_assert!(!replicas.is_empty());
    if replicas.len() == 1 {
        return Ok(0);
    }
    match mode {
        RoutingMode::Hash => {
            let n: u128 = instance_id
                .parse()
                .map_err(|_| Error::NonNumericInstanceId(instance_id.to_string()))?;
            Ok((n % replicas.len() as u128) as usize)
        }
        RoutingMode::Probability => {
            let draw: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, p) in replicas.iter().enumerate() {
                acc += p.portion;
                if draw < acc {
                    return Ok(i);
                }
            }
            Ok(replicas.len() - 1)
        }
    }
}

/// Effected max schedule time if 100% of `source`'s current workload moved
/// to `cand`: the candidate node time plus every parent/child link total
/// after its increment.
fn effected_max_full_move(
    source: &NodeId,
    cand: &NodeId,
    times: &ResourceTimes,
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
) -> Result<f64> {
    let mut node_time = 0.0;
    let mut increments: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();

    for (task, placements) in &schedule.assignment {
        let Some(on_source) = placements.iter().find(|p| p.node == *source) else {
            continue;
        };
        let pt = on_source.portion;
        node_time += pt * exec.get(task, cand)?;
        for (parent, size) in graph.parents(task) {
            for pp in schedule.placements(parent)? {
                if pp.node != *cand {
                    let t = transfer_time(cluster.link(&pp.node, cand)?, size)?;
                    *increments.entry((pp.node.clone(), cand.clone())).or_insert(0.0) +=
                        pp.portion * pt * t;
                }
            }
        }
        for (child, size) in graph.children(task) {
            for cp in schedule.placements(child)? {
                if cp.node != *cand {
                    let t = transfer_time(cluster.link(cand, &cp.node)?, size)?;
                    *increments.entry((cand.clone(), cp.node.clone())).or_insert(0.0) +=
                        pt * cp.portion * t;
                }
            }
        }
    }

    let mut max = node_time;
    for (lk, inc) in increments {
        let total = times.link_time(&lk.0, &lk.1) + inc;
        max = max.max(total);
    }
    Ok(max)
}

#[allow(clippy::too_many_arguments)]
fn best_candidate(
    source: &NodeId,
    btnk_time: f64,
    times: &ResourceTimes,
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    candidates: &BTreeSet<NodeId>,
) -> Result<Option<SplitDecision>> {
    let source_time = times.node_time(source);
    if source_time <= 0.0 {
        return Ok(None);
    }
    let mut best: Option<(NodeId, f64)> = None;
    for cand in candidates {
        if cand == source {
            continue;
        }
        let t = effected_max_full_move(source, cand, times, schedule, graph, cluster, exec)?;
        match &best {
            Some((_, bt)) if t >= *bt => {}
            _ => best = Some((cand.clone(), t)),
        }
    }
    Ok(best.map(|(target, t)| {
        // Balance against the bottleneck being relieved, not the source
        // node's own compute time; the two coincide for node bottlenecks
        // but differ when a link is the constraint.
        let portion = btnk_time / (btnk_time + t);
        SplitDecision {
            source_node: source.clone(),
            target_node: target,
            predicted_source_time: (1.0 - portion) * source_time,
            predicted_target_time: portion * t,
            portion,
        }
    }))
}

/// Phase one of the split loop: find the bottleneck (redirecting a link
/// bottleneck to its better side node), evaluate every idle candidate with a
/// tentative 100% move, and compute the equalizing portion. Returns `None`
/// when the candidate pool is empty.
pub fn select_split(
    times: &ResourceTimes,
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    candidates: &BTreeSet<NodeId>,
) -> Result<Option<SplitDecision>> {
    if candidates.is_empty() {
        return Ok(None);
    }
    let Some((resource, btnk_time)) = bottleneck(times) else {
        return Ok(None);
    };
    if btnk_time <= 0.0 {
        return Ok(None);
    }
    match resource {
        Resource::Node(n) => best_candidate(&n, btnk_time, times, schedule, graph, cluster, exec, candidates),
        Resource::Link(u, v) => {
            // Split the source or destination node, whichever yields the
            // smaller predicted system max after the split.
            let mut best: Option<(SplitDecision, f64)> = None;
            for side in [&u, &v] {
                if let Some(d) =
                    best_candidate(side, btnk_time, times, schedule, graph, cluster, exec, candidates)?
                {
                    let applied = apply_split(schedule, &d)?;
                    let new_max = resource_times(&applied, graph, cluster, exec)?.max_time();
                    match &best {
                        Some((_, bm)) if new_max >= *bm => {}
                        _ => best = Some((d, new_max)),
                    }
                }
            }
            Ok(best.map(|(d, _)| d))
        }
    }
}

/// Phase two: every task placement on the source node with portion `p`
/// becomes `p * (1 - ptn)` on the source and `p * ptn` on the target, so
/// portion sums per task are preserved and re-splits compose
/// multiplicatively.
pub fn apply_split(schedule: &Schedule, decision: &SplitDecision) -> Result<Schedule> {
    let ptn = decision.portion;
    if !(ptn > 0.0 && ptn < 1.0) {
        return Err(Error::Config(format!(
            "split portion {ptn} outside (0, 1)"
        )));
    }
    let mut out = schedule.clone();
    for placements in out.assignment.values_mut() {
        let Some(idx) = placements.iter().position(|p| p.node == decision.source_node) else {
            continue;
        };
        let p = placements[idx].portion;
        placements[idx].portion = p * (1.0 - ptn);
        match placements.iter_mut().find(|pl| pl.node == decision.target_node) {
            Some(existing) => existing.portion += p * ptn,
            None => placements.push(Placement {
                node: decision.target_node.clone(),
                portion: p * ptn,
            }),
        }
        placements.sort_by(|a, b| a.node.cmp(&b.node));
    }
    debug_assert!(out.portions_conserved());
    Ok(out)
}

/// Repeat select/apply until the candidate pool is exhausted, a split would
/// increase the predicted system max, or `max_rounds` is reached. The
/// predicted max schedule time never increases across rounds.
pub fn iterate_split(
    schedule: &Schedule,
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    max_rounds: usize,
) -> Result<SplitOutcome> {
    let mut current = schedule.clone();
    let mut rounds = Vec::new();
    for _ in 0..max_rounds {
        let times = resource_times(&current, graph, cluster, exec)?;
        let candidates = current.idle_nodes(cluster);
        let Some(decision) = select_split(&times, &current, graph, cluster, exec, &candidates)?
        else {
            break;
        };
        let before = times.max_time();
        let next = apply_split(&current, &decision)?;
        let after = resource_times(&next, graph, cluster, exec)?.max_time();
        if after > before + 1e-9 {
            break;
        }
        rounds.push(SplitRound {
            decision,
            predicted_max_before: before,
            predicted_max_after: after,
        });
        current = next;
    }
    Ok(SplitOutcome { schedule: current, rounds })
}
