//! JSON file formats for DAGs, clusters, execution matrices, and schedules,
//! plus CSV readers for measurement samples and a CSV writer for simulation
//! event logs. The JSON shapes here are the on-disk schema; example files
//! live under `schemas/` in the repository root.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Cluster, ExecutionMatrix, LinkProfile, NodeId, Placement, Schedule, TaskGraph, TaskId,
};
use crate::profiling::{ExecSample, TransferSample};
use crate::sim::SimEvent;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeFile {
    pub from: TaskId,
    pub to: TaskId,
    pub size_bytes: u64,
}

/// On-disk DAG: task list, file-carrying edges, and the entry/exit tasks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagFile {
    pub tasks: Vec<TaskId>,
    pub edges: Vec<EdgeFile>,
    pub entry: TaskId,
    pub exit: TaskId,
}

impl From<&TaskGraph> for DagFile {
    fn from(g: &TaskGraph) -> Self {
        DagFile {
            tasks: g.tasks.iter().cloned().collect(),
            edges: g
                .edges
                .iter()
                .map(|((from, to), size)| EdgeFile {
                    from: from.clone(),
                    to: to.clone(),
                    size_bytes: *size,
                })
                .collect(),
            entry: g.entry_task.clone(),
            exit: g.exit_task.clone(),
        }
    }
}

impl From<DagFile> for TaskGraph {
    fn from(f: DagFile) -> Self {
        TaskGraph::new(
            f.tasks,
            f.edges.into_iter().map(|e| (e.from, e.to, e.size_bytes)),
            f.entry,
            f.exit,
        )
    }
}

/// One directed (or symmetric) link with its quadratic profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkFile {
    pub src: NodeId,
    pub dst: NodeId,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Also install the reverse direction with the same coefficients.
    #[serde(default)]
    pub symmetric: bool,
}

/// On-disk cluster: nodes, an optional profile applied to every ordered
/// pair, and per-link overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterFile {
    pub nodes: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_link: Option<LinkProfile>,
    #[serde(default)]
    pub links: Vec<LinkFile>,
}

impl From<&Cluster> for ClusterFile {
    fn from(c: &Cluster) -> Self {
        ClusterFile {
            nodes: c.nodes.iter().cloned().collect(),
            default_link: None,
            links: c
                .links
                .iter()
                .map(|((src, dst), p)| LinkFile {
                    src: src.clone(),
                    dst: dst.clone(),
                    a: p.a,
                    b: p.b,
                    c: p.c,
                    symmetric: false,
                })
                .collect(),
        }
    }
}

impl From<ClusterFile> for Cluster {
    fn from(f: ClusterFile) -> Self {
        let mut cluster = match f.default_link {
            Some(p) => Cluster::uniform(f.nodes, p),
            None => Cluster {
                nodes: f.nodes.into_iter().collect(),
                links: BTreeMap::new(),
            },
        };
        for l in f.links {
            let p = LinkProfile::new(l.a, l.b, l.c);
            cluster.links.insert((l.src.clone(), l.dst.clone()), p);
            if l.symmetric {
                cluster.links.insert((l.dst, l.src), p);
            }
        }
        cluster
    }
}

/// On-disk execution matrix: seconds per (task, node).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub exec: BTreeMap<TaskId, BTreeMap<NodeId, f64>>,
}

/// On-disk schedule: replica placements with portions per task.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub assignment: BTreeMap<TaskId, Vec<Placement>>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<TaskGraph> {
    Ok(read_json::<DagFile>(path)?.into())
}

pub fn save_graph(path: &Path, graph: &TaskGraph) -> Result<()> {
    write_json(path, &DagFile::from(graph))
}

pub fn load_cluster(path: &Path) -> Result<Cluster> {
    Ok(read_json::<ClusterFile>(path)?.into())
}

pub fn save_cluster(path: &Path, cluster: &Cluster) -> Result<()> {
    write_json(path, &ClusterFile::from(cluster))
}

pub fn load_matrix(path: &Path) -> Result<ExecutionMatrix> {
    let f: MatrixFile = read_json(path)?;
    Ok(ExecutionMatrix { exec: f.exec })
}

pub fn save_matrix(path: &Path, matrix: &ExecutionMatrix) -> Result<()> {
    write_json(path, &MatrixFile { exec: matrix.exec.clone() })
}

pub fn load_schedule(path: &Path) -> Result<Schedule> {
    let f: ScheduleFile = read_json(path)?;
    Ok(Schedule { assignment: f.assignment })
}

pub fn save_schedule(path: &Path, schedule: &Schedule) -> Result<()> {
    write_json(path, &ScheduleFile { assignment: schedule.assignment.clone() })
}

/// Manual placement map: JSON object of task -> node.
pub fn load_manual_map(path: &Path) -> Result<BTreeMap<TaskId, NodeId>> {
    read_json(path)
}

fn csv_err(path: &Path, message: impl ToString) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Deserialize)]
struct TransferRow {
    src: NodeId,
    dst: NodeId,
    size_bytes: u64,
    time_s: f64,
}

/// Transfer samples grouped by directed link. CSV columns:
/// `src,dst,size_bytes,time_s`.
pub fn load_transfer_samples(
    path: &Path,
) -> Result<BTreeMap<(NodeId, NodeId), Vec<TransferSample>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out: BTreeMap<(NodeId, NodeId), Vec<TransferSample>> = BTreeMap::new();
    for row in reader.deserialize::<TransferRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        out.entry((row.src, row.dst)).or_default().push(TransferSample {
            size: row.size_bytes,
            time: row.time_s,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct ExecRow {
    task: TaskId,
    node: NodeId,
    time_s: f64,
}

/// Execution samples. CSV columns: `task,node,time_s`.
pub fn load_exec_samples(path: &Path) -> Result<Vec<ExecSample>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<ExecRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        out.push(ExecSample {
            task: row.task,
            node: row.node,
            time: row.time_s,
        });
    }
    Ok(out)
}

/// Event trace as CSV with columns `time,resource,event,instance,task`.
pub fn write_event_log(path: &Path, events: &[SimEvent]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(["time", "resource", "event", "instance", "task"])
        .map_err(|e| csv_err(path, e))?;
    for e in events {
        writer
            .write_record([
                format!("{}", e.time),
                e.resource.clone(),
                e.event.clone(),
                e.instance.clone(),
                e.task.clone(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush()?;
    Ok(())
}
