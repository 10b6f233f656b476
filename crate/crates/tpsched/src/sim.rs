//! Deterministic discrete-event simulation of pipelined DAG execution under
//! a schedule: single-core FIFO nodes, exclusive directed links,
//! instance-tagged transfers, bucket assembly of parent files, and replica
//! routing. Measured steady-state throughput is the ground truth the
//! analytic model is validated against.
//!
//! Nodes admit work at *stage* granularity: the tasks an instance runs on
//! one node are partitioned into stages (a task lands one stage after any
//! on-node predecessor whose data must leave the node and come back), and a
//! stage runs as one batch once every external input file for it has
//! arrived and all earlier stages on that node are done. Output files are
//! emitted when the batch completes. This is what makes a node wait for all
//! parent files of one instance before executing, and keeps pipelined
//! instances from interleaving half-finished work on a node.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::model::{
    transfer_time, validate, Cluster, ExecutionMatrix, NodeId, Resource, Schedule, TaskGraph,
    TaskId,
};
use crate::split::{choose_replica, RoutingMode};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_instances: usize,
    /// Completions dropped before measuring; `None` = max(2 x #tasks, 20),
    /// capped at half the run.
    pub warmup_instances: Option<usize>,
    /// Seconds between source injections; 0 saturates the entry node.
    pub input_interarrival: f64,
    pub seed: u64,
    /// Relative uniform jitter applied to every duration (0 = deterministic).
    pub jitter: f64,
    /// Record a per-task/per-file event trace in the result.
    pub event_log: bool,
}

impl SimConfig {
    pub fn new(num_instances: usize, seed: u64) -> Self {
        SimConfig {
            num_instances,
            warmup_instances: None,
            input_interarrival: 0.0,
            seed,
            jitter: 0.0,
            event_log: false,
        }
    }

    pub fn resolved_warmup(&self, num_tasks: usize) -> usize {
        match self.warmup_instances {
            Some(w) => w,
            None => (2 * num_tasks).max(20).min(self.num_instances / 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub resource: String,
    pub event: String,
    pub instance: String,
    pub task: String,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    /// Instances per second over post-warmup completions.
    pub throughput: f64,
    /// Fraction of the steady-state window each resource was busy.
    pub per_resource_busy_fraction: BTreeMap<Resource, f64>,
    /// (instance id, completion time) in completion order.
    pub completion_times: Vec<(String, f64)>,
    /// 1 / throughput.
    pub steady_state_period: f64,
    pub warmup_instances: usize,
    /// Instances whose parent files reached different replicas of the same
    /// child (must be zero; routing is decided once per instance and task).
    pub routing_violations: usize,
    /// Replica node chosen per (instance index, task), for tasks with more
    /// than one replica.
    pub replica_choices: BTreeMap<(usize, TaskId), NodeId>,
    /// Raw busy intervals per resource, for exclusivity audits.
    pub busy_intervals: BTreeMap<Resource, Vec<(f64, f64)>>,
    /// Populated when `event_log` is set.
    pub events: Vec<SimEvent>,
}

/// Post-warmup throughput of a finished run:
/// (#completions - 1) / (last completion - first completion).
pub fn measure_throughput(result: &SimResult) -> Result<f64> {
    let post = &result.completion_times[result.warmup_instances.min(result.completion_times.len())..];
    if post.len() < 2 {
        return Err(Error::TooFewCompletions(post.len()));
    }
    let first = post[0].1;
    let last = post[post.len() - 1].1;
    if last <= first {
        return Err(Error::TooFewCompletions(post.len()));
    }
    Ok((post.len() - 1) as f64 / (last - first))
}

/// Run one simulation. Deterministic given the seed; errors on invalid
/// inputs, deadlock, or too few post-warmup completions to measure.
pub fn simulate(
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
    schedule: &Schedule,
    config: &SimConfig,
) -> Result<SimResult> {
    validate(graph, cluster, exec).into_result()?;
    for task in &graph.tasks {
        schedule.placements(task)?;
    }
    for task in schedule.assignment.keys() {
        if !graph.tasks.contains(task) {
            return Err(Error::UnknownTask(task.clone()));
        }
    }
    if !schedule.portions_conserved() {
        return Err(Error::Config(
            "schedule portions do not sum to 1 per task".into(),
        ));
    }
    if config.num_instances == 0 {
        return Err(Error::Config("num_instances must be >= 1".into()));
    }
    let warmup = config.resolved_warmup(graph.tasks.len());
    if warmup >= config.num_instances {
        return Err(Error::Config(format!(
            "warmup_instances {warmup} must be < num_instances {}",
            config.num_instances
        )));
    }
    Engine::new(graph, cluster, exec, schedule, config, warmup).run()
}

/// One batch of same-stage tasks an instance runs on one node.
#[derive(Debug)]
struct GroupSpec {
    node: NodeId,
    stage: u32,
    /// Tasks in topological order; they run back-to-back.
    tasks: Vec<TaskId>,
    /// Incoming files from tasks hosted on other nodes.
    externals: usize,
    contains_exit: bool,
    /// Group of the next stage on the same node, if any.
    next_stage_group: Option<usize>,
}

/// Stage grouping for one realized placement (one replica choice per task).
/// Shared by every instance routed the same way.
#[derive(Debug)]
struct Layout {
    groups: Vec<GroupSpec>,
    gidx: BTreeMap<TaskId, usize>,
    node_of: BTreeMap<TaskId, NodeId>,
}

#[derive(Debug)]
struct InstanceState {
    layout: Rc<Layout>,
    missing: Vec<usize>,
    queued: Vec<bool>,
    done: Vec<bool>,
    /// Completed stages per node, for stage-order admission.
    done_stages: BTreeMap<NodeId, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Xfer {
    inst: usize,
    src_task: TaskId,
    dst_task: TaskId,
    size: u64,
}

#[derive(Debug, Default)]
struct NodeState {
    /// Ready groups, ordered by (instance, group index). Instance order is
    /// arrival order at the source, so this is FIFO whenever a node runs one
    /// stage per instance, and it keeps a node from racing ahead on later
    /// instances' early stages when it runs several.
    queue: BTreeSet<(usize, usize)>,
    running: Option<(f64, usize, usize)>,
}

#[derive(Debug, Default)]
struct LinkState {
    /// Pending transfers, ordered by instance first (then task pair), for
    /// the same reason node queues are: a saturated link must not drain all
    /// later instances' early-hop files before earlier instances' late-hop
    /// files, or finite runs overstate steady-state throughput.
    queue: BTreeSet<Xfer>,
    running: Option<(f64, Xfer)>,
}

const RANK_XFER_DONE: u8 = 0;
const RANK_GROUP_DONE: u8 = 1;
const RANK_INJECT: u8 = 2;

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    XferDone { src: NodeId, dst: NodeId },
    GroupDone { inst: usize, gidx: usize },
    Inject(usize),
}

/// Heap key: time, then completions before injections, then issue order.
/// Times are non-negative, so their bit patterns order like the floats.
#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct QEv {
    t: u64,
    rank: u8,
    seq: u64,
    ev: Ev,
}

struct Engine<'a> {
    graph: &'a TaskGraph,
    cluster: &'a Cluster,
    exec: &'a ExecutionMatrix,
    schedule: &'a Schedule,
    config: &'a SimConfig,
    warmup: usize,
    topo: Vec<TaskId>,
    /// Strict descendants of every task.
    descendants: BTreeMap<TaskId, BTreeSet<TaskId>>,
    layouts: BTreeMap<Vec<u8>, Rc<Layout>>,
    route_rng: ChaCha12Rng,
    jitter_rng: ChaCha12Rng,
    heap: BinaryHeap<Reverse<QEv>>,
    seq: u64,
    nodes: BTreeMap<NodeId, NodeState>,
    links: BTreeMap<(NodeId, NodeId), LinkState>,
    instances: Vec<Option<InstanceState>>,
    completions: Vec<(String, f64)>,
    busy: BTreeMap<Resource, Vec<(f64, f64)>>,
    events: Vec<SimEvent>,
    replica_choices: BTreeMap<(usize, TaskId), NodeId>,
    delivered_to: BTreeMap<(usize, TaskId), NodeId>,
    routing_violations: usize,
}

impl<'a> Engine<'a> {
    fn new(
        graph: &'a TaskGraph,
        cluster: &'a Cluster,
        exec: &'a ExecutionMatrix,
        schedule: &'a Schedule,
        config: &'a SimConfig,
        warmup: usize,
    ) -> Self {
        let topo = graph.topo_order().expect("validated graph is acyclic");
        let mut descendants: BTreeMap<TaskId, BTreeSet<TaskId>> = BTreeMap::new();
        for t in topo.iter().rev() {
            let mut d = BTreeSet::new();
            for (c, _) in graph.children(t) {
                d.insert(c.clone());
                d.extend(descendants[c].iter().cloned());
            }
            descendants.insert(t.clone(), d);
        }
        Engine {
            graph,
            cluster,
            exec,
            schedule,
            config,
            warmup,
            topo,
            descendants,
            layouts: BTreeMap::new(),
            route_rng: ChaCha12Rng::seed_from_u64(config.seed),
            jitter_rng: ChaCha12Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15),
            heap: BinaryHeap::new(),
            seq: 0,
            nodes: cluster
                .nodes
                .iter()
                .map(|n| (n.clone(), NodeState::default()))
                .collect(),
            links: BTreeMap::new(),
            instances: (0..config.num_instances).map(|_| None).collect(),
            completions: Vec::with_capacity(config.num_instances),
            busy: BTreeMap::new(),
            events: Vec::new(),
            replica_choices: BTreeMap::new(),
            delivered_to: BTreeMap::new(),
            routing_violations: 0,
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn push_ev(&mut self, t: f64, rank: u8, ev: Ev) {
        let seq = self.next_seq();
        self.heap.push(Reverse(QEv { t: t.to_bits(), rank, seq, ev }));
    }

    fn jittered(&mut self, d: f64) -> f64 {
        if self.config.jitter > 0.0 {
            d * (1.0 + self.jitter_rng.gen_range(-self.config.jitter..=self.config.jitter))
        } else {
            d
        }
    }

    fn log(&mut self, time: f64, resource: String, event: &str, inst: usize, task: String) {
        if self.config.event_log {
            self.events.push(SimEvent {
                time,
                resource,
                event: event.to_string(),
                instance: inst.to_string(),
                task,
            });
        }
    }

    /// Stage grouping for one replica-choice signature, memoized.
    fn layout_for(&mut self, choice: &[u8]) -> Rc<Layout> {
        if let Some(l) = self.layouts.get(choice) {
            return Rc::clone(l);
        }
        let mut node_of = BTreeMap::new();
        for (i, (task, placements)) in self.schedule.assignment.iter().enumerate() {
            node_of.insert(task.clone(), placements[choice[i] as usize].node.clone());
        }

        // stage(t) = 1 + max stage among earlier on-node tasks whose data
        // reaches t through some off-node task.
        let mut stage: BTreeMap<TaskId, u32> = BTreeMap::new();
        let mut off_reach: BTreeMap<TaskId, BTreeSet<TaskId>> = BTreeMap::new();
        for t in &self.topo {
            let n = &node_of[t];
            let mut s = 1;
            for (t0, r) in &off_reach {
                if &node_of[t0] == n && r.contains(t) {
                    s = s.max(stage[t0] + 1);
                }
            }
            stage.insert(t.clone(), s);
            let mut reach = BTreeSet::new();
            for u in &self.descendants[t] {
                if &node_of[u] != n {
                    reach.extend(self.descendants[u].iter().cloned());
                }
            }
            off_reach.insert(t.clone(), reach);
        }

        let mut by_key: BTreeMap<(NodeId, u32), Vec<TaskId>> = BTreeMap::new();
        for t in &self.topo {
            by_key
                .entry((node_of[t].clone(), stage[t]))
                .or_default()
                .push(t.clone());
        }
        let mut groups = Vec::with_capacity(by_key.len());
        let mut gidx = BTreeMap::new();
        let mut key_idx = BTreeMap::new();
        for ((node, st), tasks) in by_key {
            let idx = groups.len();
            for t in &tasks {
                gidx.insert(t.clone(), idx);
            }
            key_idx.insert((node.clone(), st), idx);
            groups.push(GroupSpec {
                contains_exit: tasks.contains(&self.graph.exit_task),
                node,
                stage: st,
                tasks,
                externals: 0,
                next_stage_group: None,
            });
        }
        for (parent, child) in self.graph.edges.keys() {
            if node_of[parent] != node_of[child] {
                groups[gidx[child]].externals += 1;
            }
        }
        let next: Vec<Option<usize>> = groups
            .iter()
            .map(|g| key_idx.get(&(g.node.clone(), g.stage + 1)).copied())
            .collect();
        for (g, n) in groups.iter_mut().zip(next) {
            g.next_stage_group = n;
        }

        let layout = Rc::new(Layout { groups, gidx, node_of });
        self.layouts.insert(choice.to_vec(), Rc::clone(&layout));
        layout
    }

    fn on_inject(&mut self, inst: usize, now: f64) -> Result<()> {
        let mut choice = Vec::with_capacity(self.schedule.assignment.len());
        let id = inst.to_string();
        for (task, placements) in &self.schedule.assignment {
            let idx = if placements.len() == 1 {
                0
            } else {
                let mode = if self.graph.parents(task).count() > 1 {
                    RoutingMode::Hash
                } else {
                    RoutingMode::Probability
                };
                choose_replica(placements, &id, mode, &mut self.route_rng)?
            };
            if placements.len() > 1 {
                self.replica_choices
                    .insert((inst, task.clone()), placements[idx].node.clone());
            }
            choice.push(idx as u8);
        }
        let layout = self.layout_for(&choice);
        let n_groups = layout.groups.len();
        let first_stage: Vec<usize> = layout
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.stage == 1)
            .map(|(i, _)| i)
            .collect();
        self.instances[inst] = Some(InstanceState {
            missing: layout.groups.iter().map(|g| g.externals).collect(),
            queued: vec![false; n_groups],
            done: vec![false; n_groups],
            done_stages: BTreeMap::new(),
            layout,
        });
        for gidx in first_stage {
            self.try_ready(inst, gidx, now)?;
        }
        Ok(())
    }

    /// Queue a group on its node if injected, fed, and next in stage order.
    fn try_ready(&mut self, inst: usize, gidx: usize, now: f64) -> Result<()> {
        let st = self.instances[inst].as_mut().expect("instance injected");
        if st.queued[gidx] || st.done[gidx] || st.missing[gidx] > 0 {
            return Ok(());
        }
        let g = &st.layout.groups[gidx];
        if st.done_stages.get(&g.node).copied().unwrap_or(0) != g.stage - 1 {
            return Ok(());
        }
        st.queued[gidx] = true;
        let node = g.node.clone();
        self.nodes
            .get_mut(&node)
            .expect("placement on known node")
            .queue
            .insert((inst, gidx));
        self.maybe_start_node(&node, now)
    }

    fn maybe_start_node(&mut self, node: &NodeId, now: f64) -> Result<()> {
        let ns = self.nodes.get_mut(node).expect("known node");
        if ns.running.is_some() {
            return Ok(());
        }
        let Some(&key) = ns.queue.iter().next() else {
            return Ok(());
        };
        ns.queue.remove(&key);
        let (inst, gidx) = key;
        let tasks: Vec<TaskId> = self.instances[inst].as_ref().expect("injected").layout.groups
            [gidx]
            .tasks
            .clone();
        let mut offset = 0.0;
        for t in &tasks {
            let d = self.jittered(self.exec.get(t, node)?);
            self.log(now + offset, node.0.clone(), "exec_start", inst, t.0.clone());
            offset += d;
            self.log(now + offset, node.0.clone(), "exec_done", inst, t.0.clone());
        }
        self.nodes.get_mut(node).expect("known node").running = Some((now, inst, gidx));
        self.push_ev(now + offset, RANK_GROUP_DONE, Ev::GroupDone { inst, gidx });
        Ok(())
    }

    fn on_group_done(&mut self, inst: usize, gidx: usize, now: f64) -> Result<()> {
        let layout = Rc::clone(&self.instances[inst].as_ref().expect("injected").layout);
        let g = &layout.groups[gidx];
        let node = g.node.clone();
        let ns = self.nodes.get_mut(&node).expect("known node");
        let (start, _, _) = ns.running.take().expect("group was running");
        self.busy
            .entry(Resource::Node(node.clone()))
            .or_default()
            .push((start, now));

        {
            let st = self.instances[inst].as_mut().expect("injected");
            st.done[gidx] = true;
            *st.done_stages.entry(node.clone()).or_insert(0) += 1;
        }
        if g.contains_exit {
            self.completions.push((inst.to_string(), now));
        }

        for t in &g.tasks {
            for (child, size) in self.graph.children(t) {
                let dst = layout.node_of[child].clone();
                if dst != node {
                    let xfer = Xfer {
                        inst,
                        src_task: t.clone(),
                        dst_task: child.clone(),
                        size,
                    };
                    self.links
                        .entry((node.clone(), dst.clone()))
                        .or_default()
                        .queue
                        .insert(xfer);
                    self.maybe_start_link(&node, &dst, now)?;
                }
            }
        }

        if let Some(ng) = g.next_stage_group {
            self.try_ready(inst, ng, now)?;
        }
        self.maybe_start_node(&node, now)
    }

    fn maybe_start_link(&mut self, src: &NodeId, dst: &NodeId, now: f64) -> Result<()> {
        let ls = self.links.get_mut(&(src.clone(), dst.clone())).expect("link created");
        if ls.running.is_some() {
            return Ok(());
        }
        let Some(xfer) = ls.queue.pop_first() else {
            return Ok(());
        };
        let d = self.jittered(transfer_time(self.cluster.link(src, dst)?, xfer.size)?);
        self.log(
            now,
            format!("{src}->{dst}"),
            "xfer_start",
            xfer.inst,
            format!("{}->{}", xfer.src_task, xfer.dst_task),
        );
        self.links
            .get_mut(&(src.clone(), dst.clone()))
            .expect("link created")
            .running = Some((now, xfer));
        self.push_ev(
            now + d,
            RANK_XFER_DONE,
            Ev::XferDone { src: src.clone(), dst: dst.clone() },
        );
        Ok(())
    }

    fn on_xfer_done(&mut self, src: &NodeId, dst: &NodeId, now: f64) -> Result<()> {
        let ls = self.links.get_mut(&(src.clone(), dst.clone())).expect("link created");
        let (start, xfer) = ls.running.take().expect("transfer was running");
        self.busy
            .entry(Resource::Link(src.clone(), dst.clone()))
            .or_default()
            .push((start, now));
        self.log(
            now,
            format!("{src}->{dst}"),
            "xfer_done",
            xfer.inst,
            format!("{}->{}", xfer.src_task, xfer.dst_task),
        );

        let key = (xfer.inst, xfer.dst_task.clone());
        match self.delivered_to.get(&key) {
            Some(n) if n != dst => self.routing_violations += 1,
            Some(_) => {}
            None => {
                self.delivered_to.insert(key, dst.clone());
            }
        }

        let st = self.instances[xfer.inst].as_mut().expect("injected");
        let dst_gidx = st.layout.gidx[&xfer.dst_task];
        st.missing[dst_gidx] -= 1;
        self.try_ready(xfer.inst, dst_gidx, now)?;
        self.maybe_start_link(src, dst, now)
    }

    fn deadlock_snapshot(&self) -> String {
        let mut lines = Vec::new();
        for (inst, state) in self.instances.iter().enumerate() {
            let Some(st) = state else {
                lines.push(format!("instance {inst}: not injected"));
                continue;
            };
            for (gidx, g) in st.layout.groups.iter().enumerate() {
                if !st.done[gidx] {
                    lines.push(format!(
                        "instance {inst}: stage {} on {} pending ({} external file(s) missing, queued={})",
                        g.stage, g.node, st.missing[gidx], st.queued[gidx]
                    ));
                }
            }
            if lines.len() > 12 {
                lines.push("...".to_string());
                break;
            }
        }
        lines.join("\n")
    }

    fn run(mut self) -> Result<SimResult> {
        for k in 0..self.config.num_instances {
            let t = k as f64 * self.config.input_interarrival;
            self.push_ev(t, RANK_INJECT, Ev::Inject(k));
        }
        while let Some(Reverse(qe)) = self.heap.pop() {
            let now = f64::from_bits(qe.t);
            match qe.ev {
                Ev::Inject(k) => self.on_inject(k, now)?,
                Ev::GroupDone { inst, gidx } => self.on_group_done(inst, gidx, now)?,
                Ev::XferDone { src, dst } => self.on_xfer_done(&src, &dst, now)?,
            }
        }
        if self.completions.len() != self.config.num_instances {
            return Err(Error::Deadlock {
                pending: self.config.num_instances - self.completions.len(),
                snapshot: self.deadlock_snapshot(),
            });
        }

        let mut result = SimResult {
            throughput: 0.0,
            per_resource_busy_fraction: BTreeMap::new(),
            completion_times: self.completions,
            steady_state_period: 0.0,
            warmup_instances: self.warmup,
            routing_violations: self.routing_violations,
            replica_choices: self.replica_choices,
            busy_intervals: self.busy,
            events: self.events,
        };
        result.throughput = measure_throughput(&result)?;
        result.steady_state_period = 1.0 / result.throughput;

        // Busy fractions over the steady window: from the first post-warmup
        // completion to one period before the last completion, when that
        // window is non-trivial; otherwise over the whole run.
        let first = result.completion_times[result.warmup_instances].1;
        let last = result.completion_times.last().expect("completions").1;
        let (w0, w1) = if last - result.steady_state_period > first {
            (first, last - result.steady_state_period)
        } else {
            (0.0, last)
        };
        let span = w1 - w0;
        for node in &self.cluster.nodes {
            result
                .per_resource_busy_fraction
                .insert(Resource::Node(node.clone()), 0.0);
        }
        for (res, intervals) in &result.busy_intervals {
            let mut b = 0.0;
            for &(s, e) in intervals {
                let (s, e) = (s.max(w0), e.min(w1));
                if e > s {
                    b += e - s;
                }
            }
            result
                .per_resource_busy_fraction
                .insert(res.clone(), if span > 0.0 { b / span } else { 0.0 });
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ref_diamond, predicted_throughput, resource_times};
    use crate::model::{LinkProfile, Placement};

    #[test]
    fn table_of_stages_single_task() {
        // single task, one node, exec 2 s -> throughput 0.5/s exactly
        let graph = TaskGraph::new(["t0"].map(TaskId::from), [], "t0".into(), "t0".into());
        let cluster = Cluster::uniform(["n1"].map(NodeId::from), LinkProfile::new(0.0, 1e-8, 0.0));
        let mut exec = ExecutionMatrix::default();
        exec.set("t0".into(), "n1".into(), 2.0);
        let schedule = Schedule::from_map(&[("t0".into(), "n1".into())].into_iter().collect());
        let mut cfg = SimConfig::new(60, 7);
        cfg.warmup_instances = Some(5);
        let r = simulate(&graph, &cluster, &exec, &schedule, &cfg).unwrap();
        assert!((r.throughput - 0.5).abs() < 1e-12);
        assert_eq!(r.completion_times.len(), 60);
        assert_eq!(r.routing_violations, 0);
    }

    #[test]
    fn ref_diamond_first_output_and_period() {
        let (g, c, m, s) = ref_diamond();
        let mut cfg = SimConfig::new(40, 1);
        cfg.warmup_instances = Some(0);
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        // First instance out at 20 s, then one every 5 s.
        assert_eq!(r.completion_times[0].1, 20.0);
        for (i, (_, t)) in r.completion_times.iter().enumerate() {
            assert_eq!(*t, 20.0 + 5.0 * i as f64, "instance {i}");
        }
        assert!((r.throughput - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ref_diamond_busy_fractions() {
        let (g, c, m, s) = ref_diamond();
        let mut cfg = SimConfig::new(400, 1);
        cfg.warmup_instances = Some(20);
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        let n3 = r.per_resource_busy_fraction[&Resource::Node("n3".into())];
        let l23 = r.per_resource_busy_fraction[&Resource::Link("n2".into(), "n3".into())];
        assert_eq!(n3, 1.0);
        assert_eq!(l23, 1.0);
        for f in r.per_resource_busy_fraction.values() {
            assert!(*f <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn ref_diamond_n1_busy_fraction_tends_to_three_fifths() {
        let (g, c, m, s) = ref_diamond();
        let mut cfg = SimConfig::new(3000, 1);
        cfg.warmup_instances = Some(20);
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        let n1 = r.per_resource_busy_fraction[&Resource::Node("n1".into())];
        assert!((n1 - 0.6).abs() < 0.05, "n1 busy {n1}");
    }

    #[test]
    fn matches_analytic_prediction_when_unsplit() {
        let (g, c, m, s) = ref_diamond();
        let times = resource_times(&s, &g, &c, &m).unwrap();
        let predicted = predicted_throughput(&times).unwrap().throughput;
        let mut cfg = SimConfig::new(300, 3);
        cfg.warmup_instances = Some(30);
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        assert!(
            (r.throughput - predicted).abs() / predicted <= 0.01,
            "sim {} vs predicted {predicted}",
            r.throughput
        );
    }

    #[test]
    fn jitter_changes_little_and_stays_deterministic() {
        let (g, c, m, s) = ref_diamond();
        let mut base = SimConfig::new(300, 5);
        base.warmup_instances = Some(30);
        let r0 = simulate(&g, &c, &m, &s, &base).unwrap();
        let mut jit = base.clone();
        jit.jitter = 0.02;
        let r1 = simulate(&g, &c, &m, &s, &jit).unwrap();
        let r2 = simulate(&g, &c, &m, &s, &jit).unwrap();
        assert!((r1.throughput - r0.throughput).abs() / r0.throughput < 0.03);
        assert_eq!(r1.throughput, r2.throughput);
        assert_eq!(r1.completion_times, r2.completion_times);
    }

    #[test]
    fn single_parent_split_uses_probability_routing() {
        // Split t1 (single parent t0 -> probability routing) and check the
        // realized shares track the portions.
        let (g, c, m, s) = ref_diamond();
        let mut split = s.clone();
        split.assignment.insert(
            "t1".into(),
            vec![
                Placement { node: "n2".into(), portion: 0.25 },
                Placement { node: "n3".into(), portion: 0.75 },
            ],
        );
        let mut cfg = SimConfig::new(1200, 11);
        cfg.warmup_instances = Some(40);
        let r = simulate(&g, &c, &m, &split, &cfg).unwrap();
        assert_eq!(r.routing_violations, 0);
        let mut counts: BTreeMap<&NodeId, usize> = BTreeMap::new();
        for ((_, task), node) in &r.replica_choices {
            if task == &TaskId::from("t1") {
                *counts.entry(node).or_default() += 1;
            }
        }
        let total: usize = counts.values().sum();
        assert_eq!(total, 1200);
        let share_n3 = counts[&NodeId::from("n3")] as f64 / total as f64;
        assert!((share_n3 - 0.75).abs() < 0.04, "share {share_n3}");
    }

    #[test]
    fn multi_parent_hash_routing_alternates_exactly() {
        // Diamond: t3 has two parents; split t3 over two nodes -> hash mode
        // alternates strictly on sequential ids and never mixes one
        // instance's files.
        let (g, c, m, s) = ref_diamond();
        let mut split = s.clone();
        split.assignment.insert(
            "t3".into(),
            vec![
                Placement { node: "n1".into(), portion: 0.5 },
                Placement { node: "n3".into(), portion: 0.5 },
            ],
        );
        let mut cfg = SimConfig::new(200, 11);
        cfg.warmup_instances = Some(20);
        let r = simulate(&g, &c, &m, &split, &cfg).unwrap();
        assert_eq!(r.routing_violations, 0);
        for inst in 0..200usize {
            let node = &r.replica_choices[&(inst, "t3".into())];
            let expect = if inst % 2 == 0 { "n1" } else { "n3" };
            assert_eq!(node, &NodeId::from(expect), "instance {inst}");
        }
    }

    #[test]
    fn busy_intervals_never_overlap() {
        let (g, c, m, s) = ref_diamond();
        let mut cfg = SimConfig::new(120, 13);
        cfg.warmup_instances = Some(10);
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        for (res, intervals) in &r.busy_intervals {
            let mut sorted = intervals.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in sorted.windows(2) {
                assert!(
                    w[0].1 <= w[1].0 + 1e-12,
                    "{res:?}: {:?} overlaps {:?}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn interarrival_slower_than_capacity_paces_output() {
        let (g, c, m, s) = ref_diamond();
        let mut cfg = SimConfig::new(100, 17);
        cfg.warmup_instances = Some(10);
        cfg.input_interarrival = 8.0; // slower than the 5 s bottleneck
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        assert!((r.throughput - 1.0 / 8.0).abs() / (1.0 / 8.0) < 0.01);
    }

    #[test]
    fn measure_throughput_examples() {
        let mk = |times: &[f64], warmup: usize| SimResult {
            throughput: 0.0,
            per_resource_busy_fraction: BTreeMap::new(),
            completion_times: times
                .iter()
                .enumerate()
                .map(|(i, t)| (i.to_string(), *t))
                .collect(),
            steady_state_period: 0.0,
            warmup_instances: warmup,
            routing_violations: 0,
            replica_choices: BTreeMap::new(),
            busy_intervals: BTreeMap::new(),
            events: Vec::new(),
        };
        assert!((measure_throughput(&mk(&[20.0, 25.0, 30.0], 0)).unwrap() - 0.2).abs() < 1e-12);
        assert!((measure_throughput(&mk(&[5.0, 6.0], 0)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            measure_throughput(&mk(&[5.0], 0)),
            Err(Error::TooFewCompletions(1))
        ));
        assert!(matches!(
            measure_throughput(&mk(&[5.0, 6.0, 7.0], 2)),
            Err(Error::TooFewCompletions(1))
        ));
    }

    #[test]
    fn event_log_records_execs_and_transfers() {
        let (g, c, m, s) = ref_diamond();
        let mut cfg = SimConfig::new(25, 19);
        cfg.warmup_instances = Some(2);
        cfg.event_log = true;
        let r = simulate(&g, &c, &m, &s, &cfg).unwrap();
        assert!(r.events.iter().any(|e| e.event == "exec_start"));
        assert!(r.events.iter().any(|e| e.event == "xfer_done"));
        // First execution of t0 starts at time 0 on n1.
        let first = r
            .events
            .iter()
            .find(|e| e.event == "exec_start" && e.task == "t0" && e.instance == "0")
            .unwrap();
        assert_eq!(first.time, 0.0);
        assert_eq!(first.resource, "n1");
    }

    #[test]
    fn convex_coplacement_runs_in_one_stage() {
        // t0 and t1 of a chain on the same node: one stage, completions
        // every (e0 + e1) seconds.
        let graph = TaskGraph::new(
            ["a", "b", "c"].map(TaskId::from),
            [("a".into(), "b".into(), 1_000), ("b".into(), "c".into(), 1_000)],
            "a".into(),
            "c".into(),
        );
        let cluster = Cluster::uniform(
            ["n1", "n2"].map(NodeId::from),
            LinkProfile::new(0.0, 1e-8, 0.0),
        );
        let mut exec = ExecutionMatrix::default();
        for t in ["a", "b", "c"] {
            for n in &cluster.nodes {
                exec.set(t.into(), n.clone(), 1.0);
            }
        }
        let schedule = Schedule::from_map(
            &[
                ("a".into(), NodeId::from("n1")),
                ("b".into(), NodeId::from("n1")),
                ("c".into(), NodeId::from("n2")),
            ]
            .into_iter()
            .collect(),
        );
        let mut cfg = SimConfig::new(80, 23);
        cfg.warmup_instances = Some(8);
        let r = simulate(&graph, &cluster, &exec, &schedule, &cfg).unwrap();
        // n1 does 2 s of work per instance and is the bottleneck.
        assert!((r.throughput - 0.5).abs() < 1e-9);
    }

    #[test]
    fn nonconvex_coplacement_uses_two_stages() {
        // a and c on n1, b on n2: n1 needs two stages per instance (a, then
        // c after b's file returns). Throughput still matches the analytic
        // busy-time model: n1 has 2 s of work per period.
        let graph = TaskGraph::new(
            ["a", "b", "c"].map(TaskId::from),
            [("a".into(), "b".into(), 1_000), ("b".into(), "c".into(), 1_000)],
            "a".into(),
            "c".into(),
        );
        let cluster = Cluster::uniform(
            ["n1", "n2"].map(NodeId::from),
            LinkProfile::new(0.0, 1e-8, 0.0),
        );
        let mut exec = ExecutionMatrix::default();
        for t in ["a", "b", "c"] {
            for n in &cluster.nodes {
                exec.set(t.into(), n.clone(), 1.0);
            }
        }
        let schedule = Schedule::from_map(
            &[
                ("a".into(), NodeId::from("n1")),
                ("b".into(), NodeId::from("n2")),
                ("c".into(), NodeId::from("n1")),
            ]
            .into_iter()
            .collect(),
        );
        let mut cfg = SimConfig::new(200, 29);
        cfg.warmup_instances = Some(20);
        let r = simulate(&graph, &cluster, &exec, &schedule, &cfg).unwrap();
        let times = resource_times(&schedule, &graph, &cluster, &exec).unwrap();
        let predicted = predicted_throughput(&times).unwrap().throughput;
        assert!(
            (r.throughput - predicted).abs() / predicted <= 0.01,
            "sim {} vs predicted {predicted}",
            r.throughput
        );
    }
}
