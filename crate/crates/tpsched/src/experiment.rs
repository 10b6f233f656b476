//! Experiment harness: run scheduler -> refiner -> simulate pipelines over a
//! grid of workload bundles and report predicted and measured throughput per
//! 1000 s, with percentage deltas against a baseline pipeline. Cells are
//! independent and run in parallel when the `parallel` feature is enabled.

use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::analysis::{predicted_throughput, resource_times};
use crate::dup::iterate_dup;
use crate::error::Result;
use crate::model::{Cluster, ExecutionMatrix, NodeId, Schedule, TaskGraph, TaskId};
use crate::schedulers::{heft_schedule, manual_schedule, tpheft_schedule};
use crate::sim::{simulate, SimConfig, SimResult};
use crate::split::iterate_split;

#[derive(Debug, Clone)]
pub struct Bundle {
    pub name: String,
    pub graph: TaskGraph,
    pub cluster: Cluster,
    pub exec: ExecutionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchedulerKind {
    Heft,
    Tpheft,
    Manual(BTreeMap<TaskId, NodeId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinerKind {
    None,
    Split,
    Dup,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub name: String,
    pub scheduler: SchedulerKind,
    pub refiner: RefinerKind,
}

impl Pipeline {
    pub fn new(name: &str, scheduler: SchedulerKind, refiner: RefinerKind) -> Self {
        Pipeline { name: name.to_string(), scheduler, refiner }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Pipeline index deltas are computed against.
    pub baseline: usize,
    pub instances: usize,
    pub seed: u64,
    pub max_rounds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { baseline: 0, instances: 400, seed: 0, max_rounds: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub bundle: String,
    pub pipeline: String,
    /// Instances per second (multiply by 1000 for the report unit).
    pub predicted: f64,
    pub simulated: f64,
    pub refine_rounds: usize,
    /// A failed cell carries its error text and zeroed numbers.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Report {
    /// Row-major: one row per bundle, one cell per pipeline.
    pub cells: Vec<Cell>,
    pub pipelines: Vec<String>,
    pub baseline: usize,
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn run_cell(bundle: &Bundle, pipeline: &Pipeline, config: &ExperimentConfig) -> Result<Cell> {
    let schedule = match &pipeline.scheduler {
        SchedulerKind::Heft => heft_schedule(&bundle.graph, &bundle.cluster, &bundle.exec)?,
        SchedulerKind::Tpheft => tpheft_schedule(&bundle.graph, &bundle.cluster, &bundle.exec)?,
        SchedulerKind::Manual(map) => {
            manual_schedule(&bundle.graph, &bundle.cluster, &bundle.exec, map)?
        }
    };
    let (graph, schedule, rounds) = match pipeline.refiner {
        RefinerKind::None => (bundle.graph.clone(), schedule, 0),
        RefinerKind::Split => {
            let out = iterate_split(
                &schedule,
                &bundle.graph,
                &bundle.cluster,
                &bundle.exec,
                config.max_rounds,
            )?;
            (bundle.graph.clone(), out.schedule, out.rounds.len())
        }
        RefinerKind::Dup => {
            let out = iterate_dup(
                &schedule,
                &bundle.graph,
                &bundle.cluster,
                &bundle.exec,
                config.max_rounds,
            )?;
            (out.graph, out.schedule, out.rounds.len())
        }
    };
    let times = resource_times(&schedule, &graph, &bundle.cluster, &bundle.exec)?;
    let predicted = predicted_throughput(&times)?.throughput;
    let mut sim_cfg = SimConfig::new(
        config.instances,
        config.seed ^ fnv1a(&[&bundle.name, &pipeline.name]),
    );
    sim_cfg.warmup_instances = Some((config.instances / 4).max(1));
    let sim = simulate(&graph, &bundle.cluster, &bundle.exec, &schedule, &sim_cfg)?;
    Ok(Cell {
        bundle: bundle.name.clone(),
        pipeline: pipeline.name.clone(),
        predicted,
        simulated: sim.throughput,
        refine_rounds: rounds,
        error: None,
    })
}

/// Run every bundle x pipeline cell. Failures land in the cell's `error`
/// field and the run continues; cell order is bundle-major and independent
/// of execution order.
pub fn run_experiment(
    bundles: &[Bundle],
    pipelines: &[Pipeline],
    config: &ExperimentConfig,
) -> Report {
    let jobs: Vec<(usize, usize)> = (0..bundles.len())
        .flat_map(|b| (0..pipelines.len()).map(move |p| (b, p)))
        .collect();
    let run = |&(b, p): &(usize, usize)| -> Cell {
        run_cell(&bundles[b], &pipelines[p], config).unwrap_or_else(|e| Cell {
            bundle: bundles[b].name.clone(),
            pipeline: pipelines[p].name.clone(),
            predicted: 0.0,
            simulated: 0.0,
            refine_rounds: 0,
            error: Some(e.to_string()),
        })
    };
    #[cfg(feature = "parallel")]
    let cells: Vec<Cell> = jobs.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let cells: Vec<Cell> = jobs.iter().map(run).collect();
    Report {
        cells,
        pipelines: pipelines.iter().map(|p| p.name.clone()).collect(),
        baseline: config.baseline.min(pipelines.len().saturating_sub(1)),
    }
}

impl Report {
    fn rows(&self) -> Vec<&[Cell]> {
        self.cells.chunks(self.pipelines.len().max(1)).collect()
    }

    /// Simulated delta versus the baseline pipeline, in percent, computed on
    /// unrounded throughputs.
    pub fn delta_pct(&self, row: &[Cell], col: usize) -> Option<f64> {
        let base = row.get(self.baseline)?;
        let cell = row.get(col)?;
        if base.error.is_some() || cell.error.is_some() || base.simulated <= 0.0 {
            return None;
        }
        Some((cell.simulated - base.simulated) / base.simulated * 100.0)
    }

    /// CSV report: one line per cell, throughput in instances per 1000 s.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("bundle,pipeline,predicted_per_1000s,simulated_per_1000s,delta_pct,refine_rounds,error\n");
        for row in self.rows() {
            for (col, cell) in row.iter().enumerate() {
                let delta = self
                    .delta_pct(row, col)
                    .map(|d| format!("{d:.4}"))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{:.4},{:.4},{},{},{}\n",
                    cell.bundle,
                    cell.pipeline,
                    cell.predicted * 1000.0,
                    cell.simulated * 1000.0,
                    delta,
                    cell.refine_rounds,
                    cell.error.clone().unwrap_or_default().replace(['\n', ','], ";"),
                ));
            }
        }
        out
    }

    /// Fixed-width table with one row per bundle; each pipeline column shows
    /// simulated throughput per 1000 s and its delta versus the baseline.
    pub fn to_table(&self) -> String {
        let width = 22;
        let mut out = format!("{:<16}", "bundle");
        for name in &self.pipelines {
            out.push_str(&format!("{name:>width$}"));
        }
        out.push('\n');
        for row in self.rows() {
            let Some(first) = row.first() else { continue };
            out.push_str(&format!("{:<16}", first.bundle));
            for (col, cell) in row.iter().enumerate() {
                let text = if let Some(e) = &cell.error {
                    format!("error: {}", e.chars().take(12).collect::<String>())
                } else {
                    match self.delta_pct(row, col) {
                        Some(d) if col != self.baseline => {
                            format!("{:.1} ({:+.1}%)", cell.simulated * 1000.0, d)
                        }
                        _ => format!("{:.1}", cell.simulated * 1000.0),
                    }
                };
                out.push_str(&format!("{text:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One simulation job for batch runs.
#[derive(Debug, Clone)]
pub struct SimJob {
    pub graph: TaskGraph,
    pub cluster: Cluster,
    pub exec: ExecutionMatrix,
    pub schedule: Schedule,
    pub config: SimConfig,
}

/// Run a batch of independent simulations, in parallel when the `parallel`
/// feature is enabled. Result order matches job order.
pub fn simulate_batch(jobs: &[SimJob]) -> Vec<Result<SimResult>> {
    #[cfg(feature = "parallel")]
    {
        jobs.par_iter()
            .map(|j| simulate(&j.graph, &j.cluster, &j.exec, &j.schedule, &j.config))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        simulate_batch_sequential(jobs)
    }
}

/// Sequential reference implementation of [`simulate_batch`]; used to check
/// and benchmark the parallel path against.
pub fn simulate_batch_sequential(jobs: &[SimJob]) -> Vec<Result<SimResult>> {
    jobs.iter()
        .map(|j| simulate(&j.graph, &j.cluster, &j.exec, &j.schedule, &j.config))
        .collect()
}
