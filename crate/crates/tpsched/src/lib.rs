//! Throughput-oriented scheduling of pipelined DAG applications on
//! heterogeneous clusters.
//!
//! The crate models an application as a task DAG whose instances stream
//! through a cluster continuously. Steady-state throughput is the inverse
//! of the busiest resource's per-instance schedule time, over nodes and
//! directed virtual links with quadratic transfer-cost profiles. On top of
//! that model it provides:
//!
//! - [`profiling`]: least-squares fitting of link profiles and execution
//!   matrices from measurement samples;
//! - [`analysis`]: per-resource schedule times, bottleneck identification,
//!   and predicted throughput for any (possibly replicated) schedule;
//! - [`schedulers`]: HEFT (latency-oriented) and TPHEFT
//!   (throughput-oriented) list schedulers, plus manual placement;
//! - [`split`]: iterative bottleneck-node splitting with portion-weighted
//!   replica routing;
//! - [`dup`]: bottleneck-link relief by task duplication with DAG rewrite;
//! - [`sim`]: a deterministic discrete-event simulator used as ground truth
//!   for the analytic model;
//! - [`gen`] and [`experiment`]: synthetic workload generation and a
//!   pipeline-comparison harness (parallel across cells with the `parallel`
//!   feature, on by default).

pub mod analysis;
pub mod dup;
pub mod error;
pub mod experiment;
pub mod gen;
pub mod io;
pub mod model;
pub mod profiling;
pub mod schedulers;
pub mod sim;
pub mod split;

pub use analysis::{bottleneck, predicted_throughput, resource_times, ResourceTimes, ThroughputEstimate};
pub use dup::{apply_duplication, find_best_dup_node, garbage_collect_zombies, iterate_dup, DupDecision, DupOutcome, DupRound};
pub use error::{Error, Result};
pub use experiment::{run_experiment, simulate_batch, simulate_batch_sequential, Bundle, ExperimentConfig, Pipeline, RefinerKind, Report, SchedulerKind, SimJob};
pub use gen::{generate, DagShape, GenParams};
pub use model::{
    transfer_time, upward_rank, validate, Cluster, ExecutionMatrix, LinkProfile, NodeId,
    Placement, Resource, Schedule, TaskGraph, TaskId, ValidationReport,
};
pub use profiling::{
    build_execution_matrix, build_execution_matrix_dense, fit_link_profile, ExecSample,
    TransferSample,
};
pub use schedulers::{heft_schedule, manual_schedule, tpheft_schedule};
pub use sim::{measure_throughput, simulate, SimConfig, SimEvent, SimResult};
pub use split::{apply_split, choose_replica, iterate_split, select_split, RoutingMode, SplitDecision, SplitOutcome, SplitRound};
