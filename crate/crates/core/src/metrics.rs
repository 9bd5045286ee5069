use std::time::Duration;

use crate::instance::Instance;
use crate::solution::Solution;

/// Quality figures of one solved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub flowtime: u64,
    pub lower_bound: u64,
    /// `flowtime / lower_bound`, fixed to 1 when the bound is zero.
    pub ratio: f64,
    pub makespan: usize,
    pub runtime: Duration,
    /// Per-vertex occupancy counts, each agent counted once per timestep up
    /// to and including its final arrival.
    pub visits: Vec<u32>,
}

pub fn compute_metrics(instance: &Instance, solution: &Solution, runtime: Duration) -> Metrics {
    let flowtime = solution.flowtime();
    let lower_bound = instance.lower_bound();
    let ratio = if lower_bound == 0 {
        1.0
    } else {
        flowtime as f64 / lower_bound as f64
    };
    let mut visits = vec![0u32; instance.grid().num_vertices()];
    for path in solution.trimmed_paths() {
        for v in path {
            visits[v as usize] += 1;
        }
    }
    Metrics {
        flowtime,
        lower_bound,
        ratio,
        makespan: solution.makespan(),
        runtime,
        visits,
    }
}
