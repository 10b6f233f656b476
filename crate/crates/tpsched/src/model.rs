//! Domain types for DAGs, clusters, cost models and schedules, plus the
//! upward-rank priority metric.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::borrow::Borrow<str> for TaskId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for TaskId {
    fn from(s: &str) -> Self {
        TaskId(s.to_string())
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// DAG of tasks; edges carry the size in bytes of the file transferred from
/// parent to child. At most one edge per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskGraph {
    pub tasks: BTreeSet<TaskId>,
    pub edges: BTreeMap<(TaskId, TaskId), u64>,
    pub entry_task: TaskId,
    pub exit_task: TaskId,
}

impl TaskGraph {
    pub fn new(
        tasks: impl IntoIterator<Item = TaskId>,
        edges: impl IntoIterator<Item = (TaskId, TaskId, u64)>,
        entry_task: TaskId,
        exit_task: TaskId,
    ) -> Self {
        TaskGraph {
            tasks: tasks.into_iter().collect(),
            edges: edges
                .into_iter()
                .map(|(p, c, s)| ((p, c), s))
                .collect(),
            entry_task,
            exit_task,
        }
    }

    pub fn children(&self, task: &TaskId) -> impl Iterator<Item = (&TaskId, u64)> + '_ {
        let task = task.clone();
        self.edges
            .range((task.clone(), TaskId(String::new()))..)
            .take_while(move |((p, _), _)| *p == task)
            .map(|((_, c), s)| (c, *s))
    }

    pub fn parents(&self, task: &TaskId) -> impl Iterator<Item = (&TaskId, u64)> + '_ {
        let task = task.clone();
        self.edges
            .iter()
            .filter(move |((_, c), _)| *c == task)
            .map(|((p, _), s)| (p, *s))
    }

    pub fn file_size(&self, parent: &TaskId, child: &TaskId) -> Option<u64> {
        self.edges.get(&(parent.clone(), child.clone())).copied()
    }

    /// Deterministic topological order (Kahn, lexicographic among ready tasks).
    pub fn topo_order(&self) -> Result<Vec<TaskId>> {
        let mut indeg: BTreeMap<&TaskId, usize> =
            self.tasks.iter().map(|t| (t, 0)).collect();
        for (_, c) in self.edges.keys() {
            if let Some(d) = indeg.get_mut(c) {
                *d += 1;
            }
        }
        let mut ready: BTreeSet<&TaskId> = indeg
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(t, _)| *t)
            .collect();
        let mut order = Vec::with_capacity(self.tasks.len());
        while let Some(&t) = ready.iter().next() {
            ready.remove(t);
            order.push(t.clone());
            for (c, _) in self.children(t) {
                let d = indeg.get_mut(c).expect("edge endpoint in task set");
                *d -= 1;
                if *d == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() == self.tasks.len() {
            Ok(order)
        } else {
            Err(Error::Cycle)
        }
    }

    /// Tasks from which `exit_task` is reachable (including the exit itself).
    pub fn can_reach_exit(&self) -> BTreeSet<TaskId> {
        let mut rev: BTreeMap<&TaskId, Vec<&TaskId>> = BTreeMap::new();
        for (p, c) in self.edges.keys() {
            rev.entry(c).or_default().push(p);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![&self.exit_task];
        while let Some(t) = stack.pop() {
            if seen.insert(t.clone()) {
                if let Some(ps) = rev.get(t) {
                    stack.extend(ps.iter().copied());
                }
            }
        }
        seen
    }

    /// Tasks reachable from `entry_task` (including the entry itself).
    pub fn reachable_from_entry(&self) -> BTreeSet<TaskId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![&self.entry_task];
        while let Some(t) = stack.pop() {
            if seen.insert(t.clone()) {
                stack.extend(self.children(t).map(|(c, _)| c));
            }
        }
        seen
    }
}

/// Quadratic virtual-link cost model: predicted transfer time for a file of
/// `s` bytes is `a*s^2 + b*s + c` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Size range covered by the training samples, when fitted from data.
    /// Evaluations outside this range are extrapolations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_range: Option<(u64, u64)>,
}

impl LinkProfile {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        LinkProfile {
            a,
            b,
            c,
            trained_range: None,
        }
    }

    pub fn is_extrapolation(&self, size: u64) -> bool {
        match self.trained_range {
            Some((lo, hi)) => size < lo || size > hi,
            None => false,
        }
    }
}

/// Predicted transfer time of a file over a link. Intra-node transfers never
/// reach this function; they cost zero.
pub fn transfer_time(profile: &LinkProfile, size: u64) -> Result<f64> {
    let s = size as f64;
    let t = profile.a * s * s + profile.b * s + profile.c;
    if t < 0.0 {
        return Err(Error::NegativeTransferTime {
            a: profile.a,
            b: profile.b,
            c: profile.c,
            size,
            time: t,
        });
    }
    Ok(t)
}

/// Nodes plus a directed virtual link between every ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub nodes: BTreeSet<NodeId>,
    pub links: BTreeMap<(NodeId, NodeId), LinkProfile>,
}

impl Cluster {
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        links: impl IntoIterator<Item = (NodeId, NodeId, LinkProfile)>,
    ) -> Self {
        Cluster {
            nodes: nodes.into_iter().collect(),
            links: links.into_iter().map(|(u, v, p)| ((u, v), p)).collect(),
        }
    }

    /// Fully connected cluster with the same profile on every link.
    pub fn uniform(nodes: impl IntoIterator<Item = NodeId>, profile: LinkProfile) -> Self {
        let nodes: BTreeSet<NodeId> = nodes.into_iter().collect();
        let mut links = BTreeMap::new();
        for u in &nodes {
            for v in &nodes {
                if u != v {
                    links.insert((u.clone(), v.clone()), profile);
                }
            }
        }
        Cluster { nodes, links }
    }

    pub fn link(&self, src: &NodeId, dst: &NodeId) -> Result<&LinkProfile> {
        self.links
            .get(&(src.clone(), dst.clone()))
            .ok_or_else(|| Error::MissingLink {
                src: src.clone(),
                dst: dst.clone(),
            })
    }
}

/// Measured or declared execution time of every task on every node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutionMatrix {
    pub exec: BTreeMap<TaskId, BTreeMap<NodeId, f64>>,
}

impl ExecutionMatrix {
    /// Execution time of `task` on `node`. Duplicated tasks (named with
    /// `-dup` suffixes) run the same code as their originals, so a missing
    /// entry falls back to the name with suffixes stripped.
    pub fn get(&self, task: &TaskId, node: &NodeId) -> Result<f64> {
        let mut name = task.0.as_str();
        loop {
            if let Some(&t) = self.exec.get(name).and_then(|m| m.get(node)) {
                return Ok(t);
            }
            match name.strip_suffix("-dup") {
                Some(rest) => name = rest,
                None => {
                    return Err(Error::MissingExec {
                        task: task.clone(),
                        node: node.clone(),
                    })
                }
            }
        }
    }

    pub fn set(&mut self, task: TaskId, node: NodeId, time: f64) {
        self.exec.entry(task).or_default().insert(node, time);
    }
}

/// One replica of a task: the node it runs on and its share of the task's
/// instance stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub node: NodeId,
    pub portion: f64,
}

/// Map from each task to its (non-empty) replica placements. Portions per
/// task sum to 1; unsplit schedules have a single portion-1 placement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub assignment: BTreeMap<TaskId, Vec<Placement>>,
}

impl Schedule {
    /// Unsplit schedule from a plain task -> node map.
    pub fn from_map(map: &BTreeMap<TaskId, NodeId>) -> Self {
        Schedule {
            assignment: map
                .iter()
                .map(|(t, n)| {
                    (
                        t.clone(),
                        vec![Placement {
                            node: n.clone(),
                            portion: 1.0,
                        }],
                    )
                })
                .collect(),
        }
    }

    pub fn placements(&self, task: &TaskId) -> Result<&[Placement]> {
        self.assignment
            .get(task)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownTask(task.clone()))
    }

    /// The single node of an unsplit task; errors if the task is split.
    pub fn sole_node(&self, task: &TaskId) -> Result<&NodeId> {
        let p = self.placements(task)?;
        if p.len() != 1 {
            return Err(Error::SplitScheduleUnsupported(task.clone()));
        }
        Ok(&p[0].node)
    }

    pub fn is_unsplit(&self) -> bool {
        self.assignment.values().all(|p| p.len() == 1)
    }

    /// Nodes with no placements at all: the SPLIT/DUP candidate pool.
    pub fn idle_nodes(&self, cluster: &Cluster) -> BTreeSet<NodeId> {
        let used: BTreeSet<&NodeId> = self
            .assignment
            .values()
            .flatten()
            .map(|p| &p.node)
            .collect();
        cluster
            .nodes
            .iter()
            .filter(|n| !used.contains(n))
            .cloned()
            .collect()
    }

    /// Portion-sum and positivity check, 1e-9 tolerance.
    pub fn portions_conserved(&self) -> bool {
        self.assignment.values().all(|ps| {
            !ps.is_empty()
                && ps.iter().all(|p| p.portion > 0.0)
                && (ps.iter().map(|p| p.portion).sum::<f64>() - 1.0).abs() <= PORTION_TOLERANCE
        })
    }
}

/// A schedulable resource: a node or a directed link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    Node(NodeId),
    Link(NodeId, NodeId),
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Node(n) => write!(f, "node:{n}"),
            Resource::Link(u, v) => write!(f, "link:{u}->{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Cycle,
    EntryHasParents(TaskId),
    ExitHasChildren(TaskId),
    UnreachableFromEntry(TaskId),
    CannotReachExit(TaskId),
    DanglingEdgeEndpoint(TaskId, TaskId),
    MissingExecEntry(TaskId, NodeId),
    NonPositiveExec(TaskId, NodeId, f64),
    MissingLinkProfile(NodeId, NodeId),
    NegativeLinkTime(NodeId, NodeId, u64),
    UnknownEntryOrExit(TaskId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle => write!(f, "cycle found in task graph"),
            Violation::EntryHasParents(t) => write!(f, "entry task {t} has parents"),
            Violation::ExitHasChildren(t) => write!(f, "exit task {t} has children"),
            Violation::UnreachableFromEntry(t) => {
                write!(f, "task {t} unreachable from entry task")
            }
            Violation::CannotReachExit(t) => write!(f, "exit task unreachable from task {t}"),
            Violation::DanglingEdgeEndpoint(p, c) => {
                write!(f, "edge {p} -> {c} references a task outside the task set")
            }
            Violation::MissingExecEntry(t, n) => {
                write!(f, "missing exec entry for ({t}, {n})")
            }
            Violation::NonPositiveExec(t, n, v) => {
                write!(f, "non-positive exec time {v} for ({t}, {n})")
            }
            Violation::MissingLinkProfile(u, v) => {
                write!(f, "missing link profile for {u} -> {v}")
            }
            Violation::NegativeLinkTime(u, v, s) => {
                write!(f, "link {u} -> {v} predicts negative time at size {s}")
            }
            Violation::UnknownEntryOrExit(t) => {
                write!(f, "entry/exit task {t} not in task set")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.ok() {
            Ok(())
        } else {
            Err(Error::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Report-style validation of a (graph, cluster, matrix) triple; collects the
/// complete list of violations instead of stopping at the first.
pub fn validate(graph: &TaskGraph, cluster: &Cluster, exec: &ExecutionMatrix) -> ValidationReport {
    let mut v = Vec::new();

    for t in [&graph.entry_task, &graph.exit_task] {
        if !graph.tasks.contains(t) {
            v.push(Violation::UnknownEntryOrExit(t.clone()));
        }
    }
    for (p, c) in graph.edges.keys() {
        if !graph.tasks.contains(p) || !graph.tasks.contains(c) {
            v.push(Violation::DanglingEdgeEndpoint(p.clone(), c.clone()));
        }
    }
    if graph.topo_order().is_err() {
        v.push(Violation::Cycle);
    } else {
        if graph.parents(&graph.entry_task).next().is_some() {
            v.push(Violation::EntryHasParents(graph.entry_task.clone()));
        }
        if graph.children(&graph.exit_task).next().is_some() {
            v.push(Violation::ExitHasChildren(graph.exit_task.clone()));
        }
        let from_entry = graph.reachable_from_entry();
        let to_exit = graph.can_reach_exit();
        for t in &graph.tasks {
            if !from_entry.contains(t) {
                v.push(Violation::UnreachableFromEntry(t.clone()));
            }
            if !to_exit.contains(t) {
                v.push(Violation::CannotReachExit(t.clone()));
            }
        }
    }

    for t in &graph.tasks {
        for n in &cluster.nodes {
            match exec.get(t, n) {
                Err(_) => v.push(Violation::MissingExecEntry(t.clone(), n.clone())),
                Ok(x) if x <= 0.0 || !x.is_finite() => {
                    v.push(Violation::NonPositiveExec(t.clone(), n.clone(), x))
                }
                _ => {}
            }
        }
    }

    for u in &cluster.nodes {
        for w in &cluster.nodes {
            if u == w {
                continue;
            }
            match cluster.links.get(&(u.clone(), w.clone())) {
                None => v.push(Violation::MissingLinkProfile(u.clone(), w.clone())),
                Some(profile) => {
                    // Check the profile against every file size it may carry.
                    for ((_, _), &size) in &graph.edges {
                        if transfer_time(profile, size).is_err() {
                            v.push(Violation::NegativeLinkTime(u.clone(), w.clone(), size));
                            break;
                        }
                    }
                }
            }
        }
    }

    ValidationReport { violations: v }
}

/// Upward rank: `rank(n) = comp(n) + max_k (comm(n,k) + rank(k))` over the
/// children of n, where comp is the mean execution time over all nodes and
/// comm is the mean transfer time over all ordered inter-node links. Same-node
/// zero-cost pairs are excluded from the communication average.
pub fn upward_rank(
    graph: &TaskGraph,
    cluster: &Cluster,
    exec: &ExecutionMatrix,
) -> Result<BTreeMap<TaskId, f64>> {
    let order = graph.topo_order()?;
    let mut rank: BTreeMap<TaskId, f64> = BTreeMap::new();
    for t in order.iter().rev() {
        let comp = mean_exec(t, cluster, exec)?;
        let mut best = 0.0f64;
        for (c, size) in graph.children(t) {
            let comm = mean_comm(cluster, size)?;
            let r = comm + rank.get(c).copied().unwrap_or(0.0);
            if r > best {
                best = r;
            }
        }
        rank.insert(t.clone(), comp + best);
    }
    Ok(rank)
}

pub fn mean_exec(task: &TaskId, cluster: &Cluster, exec: &ExecutionMatrix) -> Result<f64> {
    let mut sum = 0.0;
    for n in &cluster.nodes {
        sum += exec.get(task, n)?;
    }
    Ok(sum / cluster.nodes.len() as f64)
}

pub fn mean_comm(cluster: &Cluster, size: u64) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((u, v), profile) in &cluster.links {
        if u == v {
            continue;
        }
        sum += transfer_time(profile, size)?;
        count += 1;
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(sum / count as f64)
}

/// Tasks sorted by descending upward rank, ties broken by lexicographic id.
pub fn rank_order(rank: &BTreeMap<TaskId, f64>) -> Vec<TaskId> {
    let mut tasks: Vec<TaskId> = rank.keys().cloned().collect();
    tasks.sort_by(|a, b| {
        rank[b]
            .partial_cmp(&rank[a])
            .expect("finite ranks")
            .then_with(|| a.cmp(b))
    });
    tasks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> TaskGraph {
        TaskGraph::new(
            ["t0", "t1", "t2", "t3"].map(TaskId::from),
            [
                ("t0".into(), "t1".into(), 2_000_000),
                ("t0".into(), "t2".into(), 1_000_000),
                ("t1".into(), "t3".into(), 3_000_000),
                ("t2".into(), "t3".into(), 2_000_000),
            ],
            "t0".into(),
            "t3".into(),
        )
    }

    fn linear_cluster() -> Cluster {
        Cluster::uniform(
            ["n1", "n2", "n3"].map(NodeId::from),
            LinkProfile::new(0.0, 1e-6, 0.0),
        )
    }

    fn full_matrix(graph: &TaskGraph, cluster: &Cluster, times: &[f64]) -> ExecutionMatrix {
        let mut m = ExecutionMatrix::default();
        for (t, &x) in graph.tasks.iter().zip(times) {
            for n in &cluster.nodes {
                m.set(t.clone(), n.clone(), x);
            }
        }
        m
    }

    #[test]
    fn validate_diamond_ok() {
        let g = diamond();
        let c = linear_cluster();
        let m = full_matrix(&g, &c, &[3.0, 2.0, 2.0, 5.0]);
        assert!(validate(&g, &c, &m).ok());
    }

    #[test]
    fn validate_detects_self_loop_cycle() {
        let mut g = diamond();
        g.edges.insert(("t1".into(), "t1".into()), 1);
        let c = linear_cluster();
        let m = full_matrix(&g, &c, &[3.0, 2.0, 2.0, 5.0]);
        let r = validate(&g, &c, &m);
        assert!(r.violations.contains(&Violation::Cycle));
    }

    #[test]
    fn validate_detects_missing_exec_entry() {
        let g = diamond();
        let c = linear_cluster();
        let mut m = full_matrix(&g, &c, &[3.0, 2.0, 2.0, 5.0]);
        m.exec.get_mut(&TaskId::from("t3")).unwrap().remove(&NodeId::from("n2"));
        let r = validate(&g, &c, &m);
        assert!(r
            .violations
            .contains(&Violation::MissingExecEntry("t3".into(), "n2".into())));
    }

    #[test]
    fn transfer_time_zero_profile() {
        let p = LinkProfile::new(0.0, 0.0, 0.0);
        assert_eq!(transfer_time(&p, 1_000_000).unwrap(), 0.0);
    }

    #[test]
    fn transfer_time_quadratic_evaluation() {
        // 3*4 + 2*2 + 1 = 17 at size 2 in unit scale
        let p = LinkProfile::new(3.0, 2.0, 1.0);
        assert_eq!(transfer_time(&p, 2).unwrap(), 17.0);
    }

    #[test]
    fn transfer_time_fixed_bandwidth_case() {
        let p = LinkProfile::new(0.0, 1e-6, 0.0);
        assert!((transfer_time(&p, 5_000_000).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_time_rejects_negative_prediction() {
        let p = LinkProfile::new(0.0, -1.0, 0.5);
        assert!(transfer_time(&p, 10).is_err());
    }

    #[test]
    fn upward_rank_exit_is_comp_only() {
        let g = diamond();
        let c = linear_cluster();
        let m = full_matrix(&g, &c, &[3.0, 2.0, 2.0, 5.0]);
        let r = upward_rank(&g, &c, &m).unwrap();
        assert!((r[&TaskId::from("t3")] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn upward_rank_two_task_chain() {
        // comp(t0)=3, comp(t1)=5, mean comm=2 -> rank(t1)=5, rank(t0)=10
        let g = TaskGraph::new(
            ["t0", "t1"].map(TaskId::from),
            [("t0".into(), "t1".into(), 2_000_000)],
            "t0".into(),
            "t1".into(),
        );
        let c = linear_cluster();
        let mut m = ExecutionMatrix::default();
        for n in &c.nodes {
            m.set("t0".into(), n.clone(), 3.0);
            m.set("t1".into(), n.clone(), 5.0);
        }
        let r = upward_rank(&g, &c, &m).unwrap();
        assert!((r[&TaskId::from("t1")] - 5.0).abs() < 1e-12);
        assert!((r[&TaskId::from("t0")] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn upward_rank_strictly_decreases_along_edges() {
        let g = diamond();
        let c = linear_cluster();
        let m = full_matrix(&g, &c, &[3.0, 2.0, 2.0, 5.0]);
        let r = upward_rank(&g, &c, &m).unwrap();
        for (p, ch) in g.edges.keys() {
            assert!(r[p] > r[ch], "rank must decrease along {p} -> {ch}");
        }
    }

    #[test]
    fn rank_order_is_topological_on_random_dags() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(3..9);
            let tasks: Vec<TaskId> = (0..n).map(|i| TaskId(format!("t{i:02}"))).collect();
            let mut edges = Vec::new();
            for i in 0..n - 1 {
                // Chain backbone keeps it connected, plus random forward edges.
                edges.push((tasks[i].clone(), tasks[i + 1].clone(), rng.gen_range(1..1000)));
                for j in i + 2..n {
                    if rng.gen_bool(0.2) {
                        edges.push((tasks[i].clone(), tasks[j].clone(), rng.gen_range(1..1000)));
                    }
                }
            }
            let g = TaskGraph::new(
                tasks.clone(),
                edges,
                tasks[0].clone(),
                tasks[n - 1].clone(),
            );
            let c = linear_cluster();
            let mut m = ExecutionMatrix::default();
            for t in &g.tasks {
                for node in &c.nodes {
                    m.set(t.clone(), node.clone(), rng.gen_range(0.5..10.0));
                }
            }
            let r = upward_rank(&g, &c, &m).unwrap();
            let order = rank_order(&r);
            let pos: BTreeMap<&TaskId, usize> =
                order.iter().enumerate().map(|(i, t)| (t, i)).collect();
            for (p, ch) in g.edges.keys() {
                assert!(pos[p] < pos[ch], "parent {p} must precede child {ch}");
            }
        }
    }
}
