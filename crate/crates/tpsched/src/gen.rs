//! Synthetic workload generation: reproducible DAG/cluster/matrix bundles
//! in a few canonical shapes, with compute- and communication-scale knobs
//! for sweep experiments.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::model::{validate, Cluster, ExecutionMatrix, LinkProfile, NodeId, TaskGraph, TaskId};

#[derive(Debug, Clone, PartialEq)]
pub enum DagShape {
    /// Four tasks: one producer fanning out to two middle tasks joined by a
    /// consumer.
    Diamond,
    /// Chain of `length` tasks.
    Linear { length: usize },
    /// Entry and exit tasks around `layers` layers of `width` tasks, with
    /// random edges between consecutive layers (each task keeps at least one
    /// parent and one child).
    LayeredRandom { layers: usize, width: usize, edge_prob: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub shape: DagShape,
    /// Cluster size; nodes are named n1..nN and fully connected.
    pub nodes: usize,
    /// Multiplies every execution time.
    pub compute_scale: f64,
    /// Multiplies every file size.
    pub comm_scale: f64,
    /// Relative spread of per-node speeds (0 = homogeneous cluster).
    pub heterogeneity: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn new(shape: DagShape, nodes: usize, seed: u64) -> Self {
        GenParams {
            shape,
            nodes,
            compute_scale: 1.0,
            comm_scale: 1.0,
            heterogeneity: 0.0,
            seed,
        }
    }
}

const LINK_B: f64 = 1e-6;

fn scaled_size(base: f64, comm_scale: f64) -> u64 {
    (base * comm_scale).round().max(1.0) as u64
}

/// Generate a (graph, cluster, matrix) bundle. Deterministic given the
/// parameters; the output always passes validation.
pub fn generate(params: &GenParams) -> Result<(TaskGraph, Cluster, ExecutionMatrix)> {
    if params.nodes == 0 {
        return Err(Error::Config("cluster needs at least one node".into()));
    }
    if params.compute_scale <= 0.0 || params.comm_scale <= 0.0 {
        return Err(Error::Config("scale factors must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);

    #[allow(clippy::type_complexity)]
    let (tasks, edges, base_exec): (Vec<TaskId>, Vec<(TaskId, TaskId, u64)>, BTreeMap<TaskId, f64>) =
        match &params.shape {
            DagShape::Diamond => {
                let tasks: Vec<TaskId> = ["t0", "t1", "t2", "t3"].map(TaskId::from).into();
                let cs = params.comm_scale;
                let edges = vec![
                    ("t0".into(), "t1".into(), scaled_size(2e6, cs)),
                    ("t0".into(), "t2".into(), scaled_size(1e6, cs)),
                    ("t1".into(), "t3".into(), scaled_size(3e6, cs)),
                    ("t2".into(), "t3".into(), scaled_size(2e6, cs)),
                ];
                let exec = [("t0", 3.0), ("t1", 2.0), ("t2", 2.0), ("t3", 5.0)]
                    .into_iter()
                    .map(|(t, e)| (TaskId::from(t), e))
                    .collect();
                (tasks, edges, exec)
            }
            DagShape::Linear { length } => {
                if *length < 2 {
                    return Err(Error::Config("linear chain needs length >= 2".into()));
                }
                let tasks: Vec<TaskId> = (0..*length).map(|i| TaskId(format!("t{i}"))).collect();
                let edges = tasks
                    .windows(2)
                    .map(|w| (w[0].clone(), w[1].clone(), scaled_size(1e6, params.comm_scale)))
                    .collect();
                let exec = tasks.iter().map(|t| (t.clone(), 2.0)).collect();
                (tasks, edges, exec)
            }
            DagShape::LayeredRandom { layers, width, edge_prob } => {
                if *layers == 0 || *width == 0 {
                    return Err(Error::Config("layered shape needs layers, width >= 1".into()));
                }
                if !(0.0..=1.0).contains(edge_prob) {
                    return Err(Error::Config("edge_prob must be in [0, 1]".into()));
                }
                layered_random(*layers, *width, *edge_prob, params.comm_scale, &mut rng)
            }
        };

    let nodes: Vec<NodeId> = (1..=params.nodes).map(|i| NodeId(format!("n{i}"))).collect();
    let cluster = Cluster::uniform(nodes.clone(), LinkProfile::new(0.0, LINK_B, 0.0));

    let speeds: Vec<f64> = nodes
        .iter()
        .map(|_| 1.0 + params.heterogeneity * rng.gen_range(-0.5..=0.5))
        .collect();
    let mut exec = ExecutionMatrix::default();
    for (task, base) in &base_exec {
        for (node, speed) in nodes.iter().zip(&speeds) {
            exec.set(task.clone(), node.clone(), base * params.compute_scale * speed);
        }
    }

    let entry = tasks.first().expect("non-empty task list").clone();
    let exit = tasks.last().expect("non-empty task list").clone();
    let graph = TaskGraph::new(tasks, edges, entry, exit);
    validate(&graph, &cluster, &exec).into_result()?;
    Ok((graph, cluster, exec))
}

#[allow(clippy::type_complexity)]
fn layered_random(
    layers: usize,
    width: usize,
    edge_prob: f64,
    comm_scale: f64,
    rng: &mut ChaCha12Rng,
) -> (Vec<TaskId>, Vec<(TaskId, TaskId, u64)>, BTreeMap<TaskId, f64>) {
    let mut tasks = vec![TaskId::from("entry")];
    let mut tiers: Vec<Vec<TaskId>> = vec![vec![TaskId::from("entry")]];
    for l in 0..layers {
        let tier: Vec<TaskId> = (0..width).map(|w| TaskId(format!("t{l}_{w}"))).collect();
        tasks.extend(tier.iter().cloned());
        tiers.push(tier);
    }
    tasks.push(TaskId::from("exit"));
    tiers.push(vec![TaskId::from("exit")]);

    let mut edges = Vec::new();
    for pair in tiers.windows(2) {
        let (upper, lower) = (&pair[0], &pair[1]);
        for child in lower {
            let mut got_parent = false;
            for parent in upper {
                if rng.gen_bool(edge_prob) {
                    let size = scaled_size(rng.gen_range(5e5..=3e6), comm_scale);
                    edges.push((parent.clone(), child.clone(), size));
                    got_parent = true;
                }
            }
            if !got_parent {
                let parent = upper[rng.gen_range(0..upper.len())].clone();
                let size = scaled_size(rng.gen_range(5e5..=3e6), comm_scale);
                edges.push((parent, child.clone(), size));
            }
        }
        // Every upper task needs at least one child, or it would be dead
        // weight with no path to the exit.
        for parent in upper {
            if !edges.iter().any(|(p, c, _)| p == parent && lower.contains(c)) {
                let child = lower[rng.gen_range(0..lower.len())].clone();
                let size = scaled_size(rng.gen_range(5e5..=3e6), comm_scale);
                edges.push((parent.clone(), child, size));
            }
        }
    }
    let exec = tasks
        .iter()
        .map(|t| (t.clone(), rng.gen_range(1.0..=5.0)))
        .collect();
    (tasks, edges, exec)
}
