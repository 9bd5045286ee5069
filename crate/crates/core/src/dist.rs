//! Lazily materialized per-goal hop distances.

use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use crate::grid::{Grid, VertexId};

/// Distance reported for unreachable pairs.
pub const UNREACHABLE: u32 = u32::MAX;

/// Breadth-first hop distances from every vertex to `sources` (multi-source).
pub fn bfs_from(grid: &Grid, sources: impl IntoIterator<Item = VertexId>) -> Box<[u32]> {
    let mut dist = vec![UNREACHABLE; grid.num_vertices()].into_boxed_slice();
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize] + 1;
        for &u in grid.neighbors(v) {
            if dist[u as usize] == UNREACHABLE {
                dist[u as usize] = d;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Per-goal distance tables. A table for goal `g` is built by one BFS the
/// first time any distance to `g` is requested and cached afterwards.
/// Concurrent readers are fine; the lazy fill is synchronized.
#[derive(Debug)]
pub struct DistTable {
    grid: Arc<Grid>,
    tables: Vec<OnceLock<Box<[u32]>>>,
}

impl DistTable {
    pub fn new(grid: Arc<Grid>) -> Self {
        let tables = (0..grid.num_vertices()).map(|_| OnceLock::new()).collect();
        Self { grid, tables }
    }

    /// Full table of distances to `goal`.
    #[inline]
    pub fn table(&self, goal: VertexId) -> &[u32] {
        self.tables[goal as usize].get_or_init(|| bfs_from(&self.grid, [goal]))
    }

    /// Hop distance from `v` to `goal`, or [`UNREACHABLE`].
    #[inline]
    pub fn get(&self, v: VertexId, goal: VertexId) -> u32 {
        self.table(goal)[v as usize]
    }

    /// Eagerly builds the tables for `goals` on the calling thread.
    pub fn precompute(&self, goals: &[VertexId]) {
        for &g in goals {
            self.table(g);
        }
    }

    /// Number of tables materialized so far.
    pub fn materialized(&self) -> usize {
        self.tables.iter().filter(|t| t.get().is_some()).count()
    }
}
