use thiserror::Error;

use crate::model::{NodeId, TaskId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("model validation failed:\n{0}")]
    Invalid(crate::model::ValidationReport),

    #[error("negative predicted transfer time {time} for size {size} (profile a={a}, b={b}, c={c})")]
    NegativeTransferTime {
        a: f64,
        b: f64,
        c: f64,
        size: u64,
        time: f64,
    },

    #[error("missing link profile for {src} -> {dst}")]
    MissingLink { src: NodeId, dst: NodeId },

    #[error("missing execution entry for ({task}, {node})")]
    MissingExec { task: TaskId, node: NodeId },

    #[error("missing execution samples for: {0}")]
    MissingExecSamples(String),

    #[error("underdetermined fit: need at least 3 distinct sizes, got {0}")]
    UnderdeterminedFit(usize),

    #[error("ill-conditioned normal system (pivot ratio {0:.3e}); sizes too clustered for a quadratic fit")]
    IllConditionedFit(f64),

    #[error("placement on unknown node {0}")]
    UnknownNode(NodeId),

    #[error("unknown task {0}")]
    UnknownTask(TaskId),

    #[error("schedule has no resource usage; nothing to predict")]
    EmptySchedule,

    #[error("task {0} has more than one placement; this operation requires an unsplit schedule")]
    SplitScheduleUnsupported(TaskId),

    #[error("non-numeric instance id {0:?} in hash routing mode")]
    NonNumericInstanceId(String),

    #[error("task graph contains a cycle")]
    Cycle,

    #[error("exit task unreachable from entry task after rewrite; graph is corrupt")]
    CorruptRewrite,

    #[error("simulation deadlock with {pending} instances pending:\n{snapshot}")]
    Deadlock { pending: usize, snapshot: String },

    #[error("too few post-warmup completions ({0}) to measure throughput")]
    TooFewCompletions(usize),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Csv { path: String, message: String },

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
