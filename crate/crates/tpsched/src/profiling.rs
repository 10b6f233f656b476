//! Quadratic link-profile regression from (size, time) samples and execution
//! matrix construction from per-(task, node) timing samples.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Cluster, ExecutionMatrix, LinkProfile, NodeId, TaskGraph, TaskId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferSample {
    pub size: u64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecSample {
    pub task: TaskId,
    pub node: NodeId,
    pub time: f64,
}

/// Least-squares fit of `time = a*s^2 + b*s + c`.
///
/// Sizes are rescaled by the maximum sample size before solving the normal
/// equations (byte-squared magnitudes would wreck conditioning otherwise);
/// the coefficients are unscaled on output. Requires at least three distinct
/// sizes.
pub fn fit_link_profile(samples: &[TransferSample]) -> Result<LinkProfile> {
    let distinct: BTreeSet<u64> = samples.iter().map(|s| s.size).collect();
    if distinct.len() < 3 {
        return Err(Error::UnderdeterminedFit(distinct.len()));
    }
    let max_size = *distinct.iter().max().unwrap() as f64;
    let scale = if max_size > 0.0 { max_size } else { 1.0 };

    // Normal equations for the quadratic in scaled size x = s/scale:
    // sum over samples of [x^4 x^3 x^2; x^3 x^2 x; x^2 x 1] * [a' b' c'] =
    // [sum t*x^2; sum t*x; sum t].
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for s in samples {
        let x = s.size as f64 / scale;
        let x2 = x * x;
        m[0][0] += x2 * x2;
        m[0][1] += x2 * x;
        m[0][2] += x2;
        m[1][2] += x;
        m[2][2] += 1.0;
        rhs[0] += s.time * x2;
        rhs[1] += s.time * x;
        rhs[2] += s.time;
    }
    m[1][0] = m[0][1];
    m[1][1] = m[0][2];
    m[2][0] = m[0][2];
    m[2][1] = m[1][2];

    let sol = solve3(m, rhs)?;
    let mut profile = LinkProfile::new(sol[0] / (scale * scale), sol[1] / scale, sol[2]);
    profile.trained_range = Some((
        *distinct.iter().next().unwrap(),
        *distinct.iter().last().unwrap(),
    ));
    Ok(profile)
}

/// Residual sum of squares of a profile against samples.
pub fn residual_sum_of_squares(profile: &LinkProfile, samples: &[TransferSample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let x = s.size as f64;
            let pred = profile.a * x * x + profile.b * x + profile.c;
            (s.time - pred) * (s.time - pred)
        })
        .sum()
}

/// Gaussian elimination with partial pivoting on a 3x3 system; rejects
/// near-singular systems with a pivot-ratio diagnostic.
#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Result<[f64; 3]> {
    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..3 {
        let (pivot_row, pivot) = (col..3)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot_row != col {
            m.swap(pivot_row, col);
            rhs.swap(pivot_row, col);
        }
        max_pivot = max_pivot.max(pivot);
        min_pivot = min_pivot.min(pivot);
        if pivot < 1e-12 * max_pivot.max(1.0) {
            return Err(Error::IllConditionedFit(if max_pivot > 0.0 {
                pivot / max_pivot
            } else {
                0.0
            }));
        }
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let _ = min_pivot;
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut v = rhs[row];
        for c in row + 1..3 {
            v -= m[row][c] * x[c];
        }
        x[row] = v / m[row][row];
    }
    Ok(x)
}

/// Execution matrix from timing samples: each entry is the arithmetic mean of
/// the samples for that (task, node) pair. Every pair of the bound graph and
/// cluster must be covered; the error names every missing pair.
pub fn build_execution_matrix(
    samples: &[ExecSample],
    graph: &TaskGraph,
    cluster: &Cluster,
) -> Result<ExecutionMatrix> {
    let mut sums: BTreeMap<(TaskId, NodeId), (f64, usize)> = BTreeMap::new();
    for s in samples {
        let e = sums.entry((s.task.clone(), s.node.clone())).or_insert((0.0, 0));
        e.0 += s.time;
        e.1 += 1;
    }
    let mut missing = Vec::new();
    let mut matrix = ExecutionMatrix::default();
    for t in &graph.tasks {
        for n in &cluster.nodes {
            match sums.get(&(t.clone(), n.clone())) {
                Some((sum, count)) => matrix.set(t.clone(), n.clone(), sum / *count as f64),
                None => missing.push(format!("({t}, {n})")),
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingExecSamples(missing.join(", ")));
    }
    Ok(matrix)
}

/// [`build_execution_matrix`] against the task and node sets observed in the
/// samples themselves, for callers without a bound graph and cluster: every
/// observed task must be sampled on every observed node.
pub fn build_execution_matrix_dense(samples: &[ExecSample]) -> Result<ExecutionMatrix> {
    let graph = TaskGraph {
        tasks: samples.iter().map(|s| s.task.clone()).collect(),
        edges: BTreeMap::new(),
        entry_task: TaskId(String::new()),
        exit_task: TaskId(String::new()),
    };
    let cluster = Cluster {
        nodes: samples.iter().map(|s| s.node.clone()).collect(),
        links: BTreeMap::new(),
    };
    build_execution_matrix(samples, &graph, &cluster)
}
