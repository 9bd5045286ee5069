//! Local guidance: per-agent windowed paths from the current configuration
//! that avoid each other softly.
//!
//! Each agent's path is a lexicographic minimizer of
//!
//! ```text
//!   Σ_t ⟨1 + α·[χ_t > 0], χ_t⟩ + ⟨dist(π[w], g_i), 0⟩
//! ```
//!
//! where `χ_t` counts vertex and swap conflicts of the step
//! `π[t] → π[t+1]` against the other agents' current guidance paths. With
//! global guidance attached, a middle component `δ(π[t+1])` (hop distance
//! to the agent's global path) is inserted between the two. By default a
//! wait at the agent's own goal drops the unit term (see [`GoalWait`]).
//!
//! Paths are planned agent by agent; each sweep replans every agent once
//! against the latest paths of the others. Guidance built for a successor
//! configuration starts from the parent's paths shifted by one step.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::Add;

use thiserror::Error;

use crate::global_guidance::GlobalGuidance;
use crate::grid::{Grid, VertexId, NO_VERTEX};
use crate::instance::{Configuration, Instance};

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("window must be at least 1")]
    Window,
    #[error("collision penalty must be a finite non-negative number, got {0}")]
    Alpha(f64),
    #[error("iteration counts must be at least 1")]
    Iterations,
}

/// Stage cost of a wait at the agent's own goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GoalWait {
    /// Every step costs one, waits at the goal included; the heuristic is
    /// `max(dist, w - t)`.
    Unit,
    /// Resting at the goal adds only the collision penalty, matching the
    /// flowtime objective; the heuristic is `dist`.
    #[default]
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceParams {
    /// Planning horizon `w` in timesteps.
    pub window: usize,
    /// Collision penalty `α`.
    pub alpha: f64,
    /// Sweeps when the parent's guidance is available as a warm start.
    pub iterations: usize,
    /// Sweeps when building from scratch (root node).
    pub root_iterations: usize,
    /// Insert the distance-to-global-path term into the stage cost.
    pub use_global: bool,
    pub goal_wait: GoalWait,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            window: 20,
            alpha: 3.0,
            iterations: 1,
            root_iterations: 2,
            use_global: false,
            goal_wait: GoalWait::Free,
        }
    }
}

impl GuidanceParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.window == 0 {
            return Err(ParamsError::Window);
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(ParamsError::Alpha(self.alpha));
        }
        if self.iterations == 0 || self.root_iterations == 0 {
            return Err(ParamsError::Iterations);
        }
        Ok(())
    }
}

/// Lexicographic cost `⟨primary, detour, collisions⟩`. Without global
/// guidance `detour` stays zero and the order reduces to the two-term cost.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathCost {
    pub primary: f64,
    pub detour: u64,
    pub collisions: u64,
}

impl PathCost {
    pub fn new(primary: f64, detour: u64, collisions: u64) -> Self {
        Self {
            primary,
            detour,
            collisions,
        }
    }
}

impl Eq for PathCost {}

impl Ord for PathCost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.detour.cmp(&other.detour))
            .then(self.collisions.cmp(&other.collisions))
    }
}

impl PartialOrd for PathCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for PathCost {
    type Output = PathCost;

    fn add(self, rhs: PathCost) -> PathCost {
        PathCost {
            primary: self.primary + rhs.primary,
            detour: self.detour + rhs.detour,
            collisions: self.collisions + rhs.collisions,
        }
    }
}

/// Guidance paths for all agents. A path is either empty or has exactly
/// `window + 1` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Guidance {
    window: usize,
    paths: Vec<VertexId>,
    present: Vec<bool>,
    collisions: Vec<u32>,
}

impl Guidance {
    pub fn empty(num_agents: usize, window: usize) -> Self {
        Self {
            window,
            paths: vec![NO_VERTEX; num_agents * (window + 1)],
            present: vec![false; num_agents],
            collisions: vec![0; num_agents],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.present.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    #[inline]
    pub fn path(&self, agent: usize) -> Option<&[VertexId]> {
        let len = self.window + 1;
        self.present[agent].then(|| &self.paths[agent * len..(agent + 1) * len])
    }

    /// The vertex the agent is guided to at the next timestep.
    #[inline]
    pub fn next_hint(&self, agent: usize) -> Option<VertexId> {
        self.path(agent).map(|p| p[1])
    }

    pub fn set_path(&mut self, agent: usize, path: &[VertexId]) {
        assert_eq!(path.len(), self.window + 1, "guidance path length");
        let len = self.window + 1;
        self.paths[agent * len..(agent + 1) * len].copy_from_slice(path);
        self.present[agent] = true;
    }

    pub fn clear_path(&mut self, agent: usize) {
        self.present[agent] = false;
        self.collisions[agent] = 0;
    }

    /// Per-agent conflict counts from the last sweep (zero for empty paths).
    pub fn collisions(&self) -> &[u32] {
        &self.collisions
    }

    pub fn total_collisions(&self) -> u64 {
        self.collisions.iter().map(|&c| c as u64).sum()
    }

    /// Writes each agent's next hint (or [`NO_VERTEX`]) into `out`.
    pub fn fill_hints(&self, out: &mut Vec<VertexId>) {
        out.clear();
        out.extend((0..self.num_agents()).map(|i| self.next_hint(i).unwrap_or(NO_VERTEX)));
    }
}

/// Warm start from the parent's guidance: agents that moved to their
/// guided next vertex keep their path shifted by one step (the last vertex
/// repeated); all other paths are empty.
pub fn init_guidance(q: &Configuration, prev: Option<&Guidance>, window: usize) -> Guidance {
    let mut out = Guidance::empty(q.len(), window);
    let Some(prev) = prev else {
        return out;
    };
    assert_eq!(prev.window, window, "window changed between constructions");
    let mut buf = vec![NO_VERTEX; window + 1];
    for i in 0..q.len() {
        if let Some(p) = prev.path(i) {
            if p[1] == q[i] {
                buf[..window].copy_from_slice(&p[1..]);
                buf[window] = p[window];
                out.set_path(i, &buf);
            }
        }
    }
    out
}

/// Agents sorted by descending collision count, ties by index.
pub fn order_agents(prev: &Guidance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..prev.num_agents()).collect();
    order.sort_by(|&a, &b| prev.collisions[b].cmp(&prev.collisions[a]).then(a.cmp(&b)));
    order
}

/// Conflicts of agent `agent` stepping `from → to` at timestep `t` against
/// every other non-empty path: vertex conflicts at `t + 1` plus swaps.
pub fn count_collisions(
    guidance: &Guidance,
    agent: usize,
    t: usize,
    from: VertexId,
    to: VertexId,
) -> u32 {
    assert!(t < guidance.window);
    let mut chi = 0;
    for j in 0..guidance.num_agents() {
        if j == agent {
            continue;
        }
        let Some(p) = guidance.path(j) else {
            continue;
        };
        if p[t + 1] == to {
            chi += 1;
        }
        if from != to && p[t] == to && p[t + 1] == from {
            chi += 1;
        }
    }
    chi
}

/// Open-list entry with its ordering packed into integers: `f` (primary
/// bits are monotone for non-negative floats), then deeper `t`, then
/// smaller distance to goal, then smaller vertex id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct OpenEntry {
    // (f.primary, detour, collisions) and (depth, dist, v), each packed so
    // that smaller is better; detour and collisions stay far below u32::MAX
    key: (u128, u128),
}

impl OpenEntry {
    fn new(f: PathCost, t: usize, d: u32, v: VertexId) -> Self {
        debug_assert!(f.primary >= 0.0);
        let sat = |x: u64| x.min(u32::MAX as u64) as u128;
        let depth = (u32::MAX - t as u32) as u128;
        Self {
            key: (
                (f.primary.to_bits() as u128) << 64 | sat(f.detour) << 32 | sat(f.collisions),
                depth << 64 | (d as u128) << 32 | v as u128,
            ),
        }
    }

    fn t(&self) -> usize {
        (u32::MAX - (self.key.1 >> 64) as u32) as usize
    }

    fn v(&self) -> VertexId {
        self.key.1 as u32
    }
}

impl Ord for OpenEntry {
    // BinaryHeap pops the maximum. Once the goal is within the window every
    // arriving path ties on f, and preferring progress keeps the path from
    // wandering before it gets there.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.cmp(&self.key)
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable workspace for guidance construction: occupancy tables of the
/// current guidance paths and a pre-allocated time-expanded A* arena of
/// `(window + 1) · |V|` states.
pub struct GuidanceBuilder {
    window: usize,
    vertex_occ: Vec<u32>,
    edge_occ: Vec<u32>,
    best: Vec<PathCost>,
    parent: Vec<VertexId>,
    seen: Vec<u32>,
    closed: Vec<u32>,
    stamp: u32,
    open: BinaryHeap<OpenEntry>,
    path_buf: Vec<VertexId>,
    expansions: u64,
    searches: u64,
    builds: u64,
}

impl GuidanceBuilder {
    pub fn new(grid: &Grid, window: usize) -> Self {
        let nv = grid.num_vertices();
        let states = (window + 1) * nv;
        Self {
            window,
            vertex_occ: vec![0; states],
            edge_occ: vec![0; window * nv * 4],
            best: vec![PathCost::default(); states],
            parent: vec![NO_VERTEX; states],
            seen: vec![0; states],
            closed: vec![0; states],
            stamp: 0,
            open: BinaryHeap::new(),
            path_buf: vec![NO_VERTEX; window + 1],
            expansions: 0,
            searches: 0,
            builds: 0,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// A* states expanded since creation.
    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    /// Single-agent searches run since creation.
    pub fn searches(&self) -> u64 {
        self.searches
    }

    /// Guidance constructions since creation.
    pub fn builds(&self) -> u64 {
        self.builds
    }

    // vertex-major layout: the layers of one vertex are adjacent in memory
    #[inline]
    fn state(&self, t: usize, v: VertexId) -> usize {
        v as usize * (self.window + 1) + t
    }

    #[inline]
    fn edge(&self, t: usize, u: VertexId, k: usize) -> usize {
        (u as usize * self.window + t) * 4 + k
    }

    fn register(&mut self, grid: &Grid, path: &[VertexId], sign: i32) {
        for (t, &v) in path.iter().enumerate() {
            let i = self.state(t, v);
            let slot = &mut self.vertex_occ[i];
            *slot = slot.wrapping_add_signed(sign);
        }
        for t in 0..self.window {
            let (u, v) = (path[t], path[t + 1]);
            if u != v {
                let k = grid
                    .neighbor_index(u, v)
                    .expect("guidance path is not connected");
                let i = self.edge(t, u, k);
                let slot = &mut self.edge_occ[i];
                *slot = slot.wrapping_add_signed(sign);
            }
        }
    }

    fn register_all(&mut self, grid: &Grid, guidance: &Guidance, sign: i32) {
        for i in 0..guidance.num_agents() {
            if let Some(p) = guidance.path(i) {
                let p = p.to_vec();
                self.register(grid, &p, sign);
            }
        }
    }

    /// Conflicts of the step `from → to` at `t` against registered paths.
    #[inline]
    fn chi(&self, grid: &Grid, t: usize, from: VertexId, to: VertexId) -> u32 {
        let mut chi = self.vertex_occ[self.state(t + 1, to)];
        if from != to {
            let k = grid.neighbor_index(to, from).expect("adjacent");
            chi += self.edge_occ[self.edge(t, to, k)];
        }
        chi
    }

    /// Conflicts of an agent's own registered path against the others.
    fn path_collisions(&self, grid: &Grid, path: &[VertexId]) -> u32 {
        // the agent's own entries add exactly 1 to every vertex slot and
        // nothing to the reverse-edge slots
        (0..self.window)
            .map(|t| self.chi(grid, t, path[t], path[t + 1]) - 1)
            .sum()
    }

    /// Windowed space-time A* for `agent` from `start` against the
    /// currently registered paths. Returns the path and its total cost.
    fn search(
        &mut self,
        instance: &Instance,
        agent: usize,
        start: VertexId,
        global: Option<&GlobalGuidance>,
        params: &GuidanceParams,
    ) -> PathCost {
        let grid = instance.grid();
        let goal_dist = instance.goal_dist(agent);
        let w = self.window;
        self.searches += 1;
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.fill(0);
            self.closed.fill(0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        let alpha = params.alpha;
        let goal = instance.goals()[agent];
        let free_rest = params.goal_wait == GoalWait::Free;
        let h = |v: VertexId, t: usize| -> f64 {
            let d = goal_dist[v as usize] as usize;
            if free_rest {
                d as f64
            } else {
                d.max(w - t) as f64
            }
        };

        self.open.clear();
        let root = self.state(0, start);
        self.best[root] = PathCost::default();
        self.seen[root] = stamp;
        self.parent[root] = NO_VERTEX;
        self.open.push(OpenEntry::new(
            PathCost::new(h(start, 0), 0, 0),
            0,
            goal_dist[start as usize],
            start,
        ));

        while let Some(entry) = self.open.pop() {
            let (t, v) = (entry.t(), entry.v());
            let idx = self.state(t, v);
            if self.closed[idx] == stamp {
                continue;
            }
            self.closed[idx] = stamp;
            self.expansions += 1;
            let g = self.best[idx];

            if t == w {
                let mut cur = v;
                for tt in (0..=w).rev() {
                    self.path_buf[tt] = cur;
                    cur = self.parent[self.state(tt, cur)];
                }
                return g + PathCost::new(goal_dist[v as usize] as f64, 0, 0);
            }

            for &u in grid.neighbors(v).iter().chain(std::iter::once(&v)) {
                let nidx = self.state(t + 1, u);
                if self.closed[nidx] == stamp {
                    continue;
                }
                let chi = self.chi(grid, t, v, u);
                let step = PathCost::new(
                    if free_rest && u == v && v == goal {
                        0.0
                    } else {
                        1.0
                    } + if chi > 0 { alpha } else { 0.0 },
                    global.map_or(0, |gg| gg.delta(agent, u) as u64),
                    chi as u64,
                );
                let ng = g + step;
                if self.seen[nidx] != stamp || ng < self.best[nidx] {
                    self.seen[nidx] = stamp;
                    self.best[nidx] = ng;
                    self.parent[nidx] = v;
                    self.open.push(OpenEntry::new(
                        ng + PathCost::new(h(u, t + 1), 0, 0),
                        t + 1,
                        goal_dist[u as usize],
                        u,
                    ));
                }
            }
        }
        unreachable!("waiting in place always reaches the last layer")
    }

    /// Plans agent `agent` against every other non-empty path of
    /// `guidance` (its own path is ignored).
    pub fn plan_agent(
        &mut self,
        instance: &Instance,
        agent: usize,
        q: &Configuration,
        guidance: &Guidance,
        global: Option<&GlobalGuidance>,
        params: &GuidanceParams,
    ) -> (Vec<VertexId>, PathCost) {
        assert_eq!(guidance.window(), self.window);
        let grid = instance.grid();
        self.register_all(grid, guidance, 1);
        if let Some(p) = guidance.path(agent) {
            let p = p.to_vec();
            self.register(grid, &p, -1);
        }
        let global = global.filter(|_| params.use_global);
        let cost = self.search(instance, agent, q[agent], global, params);
        let path = self.path_buf.clone();
        if let Some(p) = guidance.path(agent) {
            let p = p.to_vec();
            self.register(grid, &p, 1);
        }
        self.register_all(grid, guidance, -1);
        (path, cost)
    }

    /// Builds guidance for configuration `q`: warm start from `prev`, then
    /// `sweeps` planning sweeps (none means the warm start is returned as
    /// is). Agents are visited by descending collision count of the
    /// previous guidance.
    pub fn build(
        &mut self,
        instance: &Instance,
        q: &Configuration,
        prev: Option<&Guidance>,
        global: Option<&GlobalGuidance>,
        params: &GuidanceParams,
        sweeps: usize,
    ) -> Guidance {
        assert_eq!(params.window, self.window, "builder window mismatch");
        self.builds += 1;
        let grid = instance.grid();
        let global = global.filter(|_| params.use_global);
        let mut phi = init_guidance(q, prev, self.window);
        self.register_all(grid, &phi, 1);

        let mut order = match prev {
            Some(p) => order_agents(p),
            None => (0..q.len()).collect(),
        };
        for sweep in 0..sweeps {
            if sweep > 0 {
                order = order_agents(&phi);
            }
            for &i in &order {
                if let Some(p) = phi.path(i) {
                    let p = p.to_vec();
                    self.register(grid, &p, -1);
                }
                self.search(instance, i, q[i], global, params);
                let path = std::mem::take(&mut self.path_buf);
                self.register(grid, &path, 1);
                phi.set_path(i, &path);
                self.path_buf = path;
            }
            for i in 0..phi.num_agents() {
                phi.collisions[i] = match phi.path(i) {
                    Some(p) => self.path_collisions(grid, p),
                    None => 0,
                };
            }
        }

        self.register_all(grid, &phi, -1);
        phi
    }
}

/// Convenience wrapper around [`GuidanceBuilder::plan_agent`] with a fresh
/// workspace.
pub fn spacetime_astar(
    instance: &Instance,
    agent: usize,
    q: &Configuration,
    guidance: &Guidance,
    global: Option<&GlobalGuidance>,
    params: &GuidanceParams,
) -> (Vec<VertexId>, PathCost) {
    let mut builder = GuidanceBuilder::new(instance.grid(), params.window);
    builder.plan_agent(instance, agent, q, guidance, global, params)
}
