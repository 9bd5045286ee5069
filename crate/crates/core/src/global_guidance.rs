//! Time-independent global guidance built by space utilization
//! optimization (SUO): every agent's path is repeatedly replanned with a
//! vertex cost that grows with how many other agents' paths use it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

use rustc_hash::FxHashMap;

use crate::dist::bfs_from;
use crate::grid::{Grid, VertexId, NO_VERTEX};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuoParams {
    /// Replanning sweeps over all agents after the shortest-path start.
    pub passes: usize,
    /// Weight of one other path using a vertex, on top of the unit step.
    pub beta: f64,
}

impl Default for SuoParams {
    fn default() -> Self {
        Self {
            passes: 2,
            beta: 0.5,
        }
    }
}

/// Per-agent start-to-goal paths plus lazily built distance-to-path tables.
#[derive(Debug)]
pub struct GlobalGuidance {
    grid: Arc<Grid>,
    paths: Vec<Vec<VertexId>>,
    next: Vec<FxHashMap<VertexId, VertexId>>,
    delta: Vec<OnceLock<Box<[u32]>>>,
}

impl GlobalGuidance {
    pub fn from_paths(grid: Arc<Grid>, paths: Vec<Vec<VertexId>>) -> Self {
        for p in &paths {
            assert!(!p.is_empty(), "global guidance path is empty");
            assert!(
                p.windows(2).all(|w| grid.are_adjacent(w[0], w[1])),
                "global guidance path is not a walk"
            );
        }
        let next = paths
            .iter()
            .map(|p| p.windows(2).rev().map(|w| (w[0], w[1])).collect())
            .collect();
        let delta = (0..paths.len()).map(|_| OnceLock::new()).collect();
        Self {
            grid,
            paths,
            next,
            delta,
        }
    }

    pub fn num_agents(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, agent: usize) -> &[VertexId] {
        &self.paths[agent]
    }

    pub fn paths(&self) -> &[Vec<VertexId>] {
        &self.paths
    }

    /// Successor of `v` on the agent's path, if `v` lies on it and is not
    /// its last vertex.
    #[inline]
    pub fn next_on_path(&self, agent: usize, v: VertexId) -> Option<VertexId> {
        self.next[agent].get(&v).copied()
    }

    /// Hop distance from `v` to the nearest vertex of the agent's path.
    #[inline]
    pub fn delta(&self, agent: usize, v: VertexId) -> u32 {
        self.delta[agent].get_or_init(|| bfs_from(&self.grid, self.paths[agent].iter().copied()))
            [v as usize]
    }

    /// Number of vertex-sharing pairs: Σ_v C(k_v, 2) where `k_v` counts the
    /// paths that visit `v`.
    pub fn pairwise_overlap(&self) -> u64 {
        let usage = usage_counts(&self.grid, &self.paths);
        usage
            .iter()
            .map(|&k| k as u64 * (k as u64).saturating_sub(1) / 2)
            .sum()
    }
}

fn usage_counts(grid: &Grid, paths: &[Vec<VertexId>]) -> Vec<u32> {
    let mut usage = vec![0u32; grid.num_vertices()];
    for p in paths {
        for &v in p {
            usage[v as usize] += 1;
        }
    }
    usage
}

/// Shortest path following the distance table, preferring the neighbor
/// with the smallest id.
fn descend(grid: &Grid, start: VertexId, goal_dist: &[u32]) -> Vec<VertexId> {
    let mut path = vec![start];
    let mut v = start;
    while goal_dist[v as usize] > 0 {
        v = *grid
            .neighbors(v)
            .iter()
            .filter(|&&u| goal_dist[u as usize] + 1 == goal_dist[v as usize])
            .min()
            .expect("goal reachable");
        path.push(v);
    }
    path
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    g: f64,
    v: VertexId,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct CongestionSearch {
    best: Vec<f64>,
    parent: Vec<VertexId>,
    seen: Vec<u32>,
    closed: Vec<u32>,
    stamp: u32,
}

impl CongestionSearch {
    fn new(nv: usize) -> Self {
        Self {
            best: vec![0.0; nv],
            parent: vec![NO_VERTEX; nv],
            seen: vec![0; nv],
            closed: vec![0; nv],
            stamp: 0,
        }
    }

    /// A* where entering `u` costs `1 + beta * usage[u]`.
    fn run(
        &mut self,
        grid: &Grid,
        start: VertexId,
        goal: VertexId,
        goal_dist: &[u32],
        usage: &[u32],
        beta: f64,
    ) -> Vec<VertexId> {
        self.stamp += 1;
        let stamp = self.stamp;
        let mut open = BinaryHeap::new();
        self.best[start as usize] = 0.0;
        self.seen[start as usize] = stamp;
        self.parent[start as usize] = NO_VERTEX;
        open.push(Entry {
            f: goal_dist[start as usize] as f64,
            g: 0.0,
            v: start,
        });
        while let Some(Entry { v, .. }) = open.pop() {
            if self.closed[v as usize] == stamp {
                continue;
            }
            self.closed[v as usize] = stamp;
            if v == goal {
                let mut path = vec![v];
                let mut cur = self.parent[v as usize];
                while cur != NO_VERTEX {
                    path.push(cur);
                    cur = self.parent[cur as usize];
                }
                path.reverse();
                return path;
            }
            let g = self.best[v as usize];
            for &u in grid.neighbors(v) {
                if self.closed[u as usize] == stamp {
                    continue;
                }
                let ng = g + 1.0 + beta * usage[u as usize] as f64;
                if self.seen[u as usize] != stamp || ng < self.best[u as usize] {
                    self.seen[u as usize] = stamp;
                    self.best[u as usize] = ng;
                    self.parent[u as usize] = v;
                    open.push(Entry {
                        f: ng + goal_dist[u as usize] as f64,
                        g: ng,
                        v: u,
                    });
                }
            }
        }
        unreachable!("instance guarantees every goal is reachable")
    }
}

/// Builds global guidance by SUO. Agents are replanned in index order;
/// each replan sees the usage of every other agent's current path.
pub fn build_suo(instance: &Instance, params: SuoParams) -> GlobalGuidance {
    let grid = instance.grid();
    let n = instance.num_agents();
    let mut paths: Vec<Vec<VertexId>> = (0..n)
        .map(|i| descend(grid, instance.starts()[i], instance.goal_dist(i)))
        .collect();
    let mut usage = usage_counts(grid, &paths);
    let mut search = CongestionSearch::new(grid.num_vertices());

    for _ in 0..params.passes {
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for &v in &paths[i] {
                usage[v as usize] -= 1;
            }
            paths[i] = search.run(
                grid,
                instance.starts()[i],
                instance.goals()[i],
                instance.goal_dist(i),
                &usage,
                params.beta,
            );
            for &v in &paths[i] {
                usage[v as usize] += 1;
            }
        }
    }
    GlobalGuidance::from_paths(instance.grid_arc().clone(), paths)
}
