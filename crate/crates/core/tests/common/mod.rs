//! Independent reference implementations used as test oracles. Everything
//! here is deliberately naive: exhaustive enumeration and plain BFS.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use lacam_lg::{
    GlobalGuidance, GoalWait, Grid, Guidance, GuidanceParams, Instance, PathCost, VertexId,
};
use rand::Rng;

pub fn grid_from_rows(rows: &[&str]) -> Arc<Grid> {
    let text = format!(
        "type octile\nheight {}\nwidth {}\nmap\n{}\n",
        rows.len(),
        rows[0].len(),
        rows.join("\n")
    );
    Arc::new(Grid::parse_map(&text).unwrap())
}

pub fn open_grid(w: usize, h: usize) -> Arc<Grid> {
    Arc::new(Grid::from_mask(w, h, &vec![true; w * h]).unwrap())
}

/// Neighbors recomputed from coordinates rather than the grid's adjacency.
pub fn moves(grid: &Grid, v: VertexId) -> Vec<VertexId> {
    let (x, y) = grid.coords(v);
    let mut out = vec![v];
    let cand = [
        (x.wrapping_sub(1), y),
        (x + 1, y),
        (x, y.wrapping_sub(1)),
        (x, y + 1),
    ];
    for (cx, cy) in cand {
        if cx < grid.width() && cy < grid.height() {
            if let Some(u) = grid.vertex_at(cx, cy) {
                out.push(u);
            }
        }
    }
    out
}

/// Every collision-free configuration reachable from `q` in one step.
pub fn valid_successors(grid: &Grid, q: &[VertexId]) -> Vec<Vec<VertexId>> {
    let options: Vec<Vec<VertexId>> = q.iter().map(|&v| moves(grid, v)).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(q.len());
    fn rec(
        q: &[VertexId],
        options: &[Vec<VertexId>],
        cur: &mut Vec<VertexId>,
        out: &mut Vec<Vec<VertexId>>,
    ) {
        let i = cur.len();
        if i == q.len() {
            out.push(cur.clone());
            return;
        }
        for &u in &options[i] {
            let clash = (0..i).any(|j| cur[j] == u || (cur[j] == q[i] && q[j] == u));
            if !clash {
                cur.push(u);
                rec(q, options, cur, out);
                cur.pop();
            }
        }
    }
    rec(q, &options, &mut cur, &mut out);
    out
}

/// Minimum makespan by breadth-first search over joint configurations, or
/// `None` when the goal configuration is unreachable.
pub fn joint_bfs(grid: &Grid, starts: &[VertexId], goals: &[VertexId]) -> Option<usize> {
    let mut seen: HashMap<Vec<VertexId>, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    seen.insert(starts.to_vec(), 0);
    queue.push_back(starts.to_vec());
    while let Some(q) = queue.pop_front() {
        let d = seen[&q];
        if q == goals {
            return Some(d);
        }
        for next in valid_successors(grid, &q) {
            if !seen.contains_key(&next) {
                seen.insert(next.clone(), d + 1);
                queue.push_back(next);
            }
        }
    }
    None
}

/// Minimum flowtime by Dijkstra over (configuration, finished set). A
/// finished agent is pinned to its goal; each step costs the number of
/// unfinished agents.
pub fn optimal_flowtime(grid: &Grid, starts: &[VertexId], goals: &[VertexId]) -> Option<u64> {
    let n = starts.len();
    let full = (1u32 << n) - 1;
    type State = (Vec<VertexId>, u32);
    let mut best: HashMap<State, u64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert((starts.to_vec(), 0), 0);
    heap.push(Reverse((0u64, starts.to_vec(), 0u32)));
    while let Some(Reverse((d, q, done))) = heap.pop() {
        if best.get(&(q.clone(), done)).is_some_and(|&b| b < d) {
            continue;
        }
        if done == full {
            return Some(d);
        }
        let mut push = |q2: Vec<VertexId>, done2: u32, d2: u64| {
            let key = (q2.clone(), done2);
            if best.get(&key).is_none_or(|&b| d2 < b) {
                best.insert(key, d2);
                heap.push(Reverse((d2, q2, done2)));
            }
        };
        // declaring an agent finished is free
        for i in 0..n {
            if done & (1 << i) == 0 && q[i] == goals[i] {
                push(q.clone(), done | (1 << i), d);
            }
        }
        let step = (n - done.count_ones() as usize) as u64;
        for next in valid_successors(grid, &q) {
            if (0..n).all(|i| done & (1 << i) == 0 || next[i] == q[i]) {
                push(next, done, d + step);
            }
        }
    }
    None
}

/// Hop distance from `v` to the nearest vertex of `targets` by a fresh BFS.
pub fn bfs_to_set(grid: &Grid, targets: &[VertexId], v: VertexId) -> Option<u32> {
    let targets: HashSet<VertexId> = targets.iter().copied().collect();
    let mut seen = HashSet::from([v]);
    let mut queue = VecDeque::from([(v, 0u32)]);
    while let Some((u, d)) = queue.pop_front() {
        if targets.contains(&u) {
            return Some(d);
        }
        for w in moves(grid, u) {
            if seen.insert(w) {
                queue.push_back((w, d + 1));
            }
        }
    }
    None
}

/// Conflicts of `agent` stepping `from -> to` between `t` and `t + 1`
/// against the other non-empty guidance paths.
pub fn chi(guidance: &Guidance, agent: usize, t: usize, from: VertexId, to: VertexId) -> u64 {
    let mut c = 0;
    for j in 0..guidance.num_agents() {
        if j == agent {
            continue;
        }
        if let Some(p) = guidance.path(j) {
            if p[t + 1] == to {
                c += 1;
            }
            if from != to && p[t] == to && p[t + 1] == from {
                c += 1;
            }
        }
    }
    c
}

/// Lexicographic cost of a windowed path, computed term by term.
pub fn window_cost(
    instance: &Instance,
    agent: usize,
    path: &[VertexId],
    guidance: &Guidance,
    global: Option<&GlobalGuidance>,
    params: &GuidanceParams,
) -> PathCost {
    let grid = instance.grid();
    let mut primary = 0.0;
    let mut detour = 0;
    let mut collisions = 0;
    for t in 0..path.len() - 1 {
        let c = chi(guidance, agent, t, path[t], path[t + 1]);
        let resting = params.goal_wait == GoalWait::Free
            && path[t] == path[t + 1]
            && path[t] == instance.goals()[agent];
        primary += if resting { 0.0 } else { 1.0 } + if c > 0 { params.alpha } else { 0.0 };
        collisions += c;
        if let Some(gg) = global.filter(|_| params.use_global) {
            detour += bfs_to_set(grid, gg.path(agent), path[t + 1]).unwrap() as u64;
        }
    }
    let last = *path.last().unwrap();
    primary += bfs_to_set(grid, &[instance.goals()[agent]], last).unwrap() as f64;
    PathCost::new(primary, detour, collisions)
}

/// Every walk with `window + 1` vertices starting at `start`.
pub fn all_windows(grid: &Grid, start: VertexId, window: usize) -> Vec<Vec<VertexId>> {
    let mut out = vec![vec![start]];
    for _ in 0..window {
        let mut next = Vec::new();
        for p in &out {
            for u in moves(grid, *p.last().unwrap()) {
                let mut q = p.clone();
                q.push(u);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Exhaustive minimum of [`window_cost`] over all windowed paths.
pub fn brute_force_window(
    instance: &Instance,
    agent: usize,
    start: VertexId,
    guidance: &Guidance,
    global: Option<&GlobalGuidance>,
    params: &GuidanceParams,
) -> PathCost {
    all_windows(instance.grid(), start, params.window)
        .iter()
        .map(|p| window_cost(instance, agent, p, guidance, global, params))
        .min()
        .unwrap()
}

/// Random walk of `len` vertices, waits allowed.
pub fn random_walk<R: Rng>(rng: &mut R, grid: &Grid, start: VertexId, len: usize) -> Vec<VertexId> {
    let mut p = vec![start];
    while p.len() < len {
        let m = moves(grid, *p.last().unwrap());
        p.push(m[rng.random_range(0..m.len())]);
    }
    p
}

fn connected(grid: &Grid) -> bool {
    let n = grid.num_vertices();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0 as VertexId];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for u in moves(grid, v) {
            if !seen[u as usize] {
                seen[u as usize] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Random connected grid of at most `max_cells` passable cells inside a
/// `w x h` box.
pub fn random_small_grid<R: Rng>(
    rng: &mut R,
    max_w: usize,
    max_h: usize,
    max_cells: usize,
) -> Arc<Grid> {
    loop {
        let w = rng.random_range(1..=max_w);
        let h = rng.random_range(1..=max_h);
        let p: f64 = rng.random_range(0.0..0.4);
        let mask: Vec<bool> = (0..w * h).map(|_| !rng.random_bool(p)).collect();
        let cells = mask.iter().filter(|&&b| b).count();
        if cells < 2 || cells > max_cells {
            continue;
        }
        let Ok(grid) = Grid::from_mask(w, h, &mask) else {
            continue;
        };
        if connected(&grid) {
            return Arc::new(grid);
        }
    }
}

/// Random open-ish grid with obstacle density `p`, restricted to being
/// connected.
pub fn random_grid<R: Rng>(rng: &mut R, w: usize, h: usize, p: f64) -> Arc<Grid> {
    loop {
        let mask: Vec<bool> = (0..w * h).map(|_| !rng.random_bool(p)).collect();
        if let Ok(grid) = Grid::from_mask(w, h, &mask) {
            if connected(&grid) {
                return Arc::new(grid);
            }
        }
    }
}

/// `n` agents with distinct random starts and distinct random goals.
pub fn random_instance<R: Rng>(rng: &mut R, grid: Arc<Grid>, n: usize) -> Instance {
    let nv = grid.num_vertices();
    assert!(n <= nv);
    let starts = rand::seq::index::sample(rng, nv, n)
        .into_iter()
        .map(|v| v as VertexId)
        .collect();
    let goals = rand::seq::index::sample(rng, nv, n)
        .into_iter()
        .map(|v| v as VertexId)
        .collect();
    Instance::new(grid, starts, goals).unwrap()
}

/// One randomized comparison of the windowed A* against exhaustive
/// enumeration on a graph with at most six vertices.
pub fn astar_oracle_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    use lacam_lg::local_guidance::spacetime_astar;

    let grid = random_small_grid(rng, 3, 3, 6);
    let nv = grid.num_vertices();
    let n = rng.random_range(1..=nv.min(3));
    let inst = random_instance(rng, grid.clone(), n);
    let window = rng.random_range(1..=4);
    let alpha = [0.0, 1.0, 3.0][rng.random_range(0..3)];
    let use_global = rng.random_bool(0.5);
    let q = inst.starts().clone();
    let mut guidance = Guidance::empty(n, window);
    for j in 0..n {
        if rng.random_bool(0.75) {
            let p = random_walk(rng, &grid, q[j], window + 1);
            guidance.set_path(j, &p);
        }
    }
    let global = use_global.then(|| {
        let paths = (0..n)
            .map(|j| {
                let len = rng.random_range(1..=5);
                let mut p = random_walk(rng, &grid, q[j], len);
                p.dedup();
                p
            })
            .collect();
        GlobalGuidance::from_paths(grid.clone(), paths)
    });
    let params = GuidanceParams {
        window,
        alpha,
        iterations: 1,
        root_iterations: 1,
        use_global,
        goal_wait: if rng.random_bool(0.5) {
            GoalWait::Free
        } else {
            GoalWait::Unit
        },
    };
    let agent = rng.random_range(0..n);
    let (path, cost) = spacetime_astar(&inst, agent, &q, &guidance, global.as_ref(), &params);
    let expected = brute_force_window(&inst, agent, q[agent], &guidance, global.as_ref(), &params);
    let recomputed = (path.len() == window + 1 && path[0] == q[agent])
        .then(|| window_cost(&inst, agent, &path, &guidance, global.as_ref(), &params));
    if cost != expected || recomputed != Some(cost) {
        return Err(format!(
            "|V|={nv} n={n} w={window} alpha={alpha} global={use_global} agent={agent}: \
             got {cost:?} via {path:?} (recomputed {recomputed:?}), expected {expected:?}"
        ));
    }
    Ok(())
}

/// One randomized check of the warm-start shift on a synthetic previous
/// guidance and configuration.
pub fn shift_case<R: Rng>(rng: &mut R) -> Result<(), String> {
    use lacam_lg::local_guidance::init_guidance;
    use lacam_lg::Configuration;

    let grid = open_grid(rng.random_range(2..=6), rng.random_range(1..=6));
    let nv = grid.num_vertices() as VertexId;
    let n = rng.random_range(1..=8);
    let window = rng.random_range(1..=6);
    let mut prev = Guidance::empty(n, window);
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let start = rng.random_range(0..nv);
        let path = random_walk(rng, &grid, start, window + 1);
        if rng.random_bool(0.85) {
            prev.set_path(i, &path);
        }
        q.push(match rng.random_range(0..3) {
            0 => path[1],
            1 => path[0],
            _ => rng.random_range(0..nv),
        });
    }
    let q = Configuration::new(q);
    let out = init_guidance(&q, Some(&prev), window);
    for i in 0..n {
        let expected: Option<Vec<VertexId>> = prev.path(i).and_then(|p| {
            (q[i] == p[1]).then(|| {
                let mut s = p[1..].to_vec();
                s.push(p[window]);
                s
            })
        });
        if out.path(i).map(<[VertexId]>::to_vec) != expected {
            return Err(format!(
                "agent {i}: q={} prev={:?} got {:?}",
                q[i],
                prev.path(i),
                out.path(i)
            ));
        }
    }
    let fresh = init_guidance(&q, None, window);
    if (0..n).any(|i| fresh.path(i).is_some()) {
        return Err("construction without a previous guidance kept a path".into());
    }
    Ok(())
}

/// A small instance in cell coordinates of a `w x h` box.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmallCase {
    pub w: usize,
    pub h: usize,
    pub mask: u16,
    /// `(start cell, goal cell)` per agent, cells as `y * w + x`.
    pub agents: Vec<(u8, u8)>,
}

impl SmallCase {
    pub fn instance(&self) -> Instance {
        let mask: Vec<bool> = (0..self.w * self.h)
            .map(|c| self.mask >> c & 1 == 1)
            .collect();
        let grid = Arc::new(Grid::from_mask(self.w, self.h, &mask).unwrap());
        let at = |c: u8| {
            grid.vertex_at(c as usize % self.w, c as usize / self.w)
                .unwrap()
        };
        let starts = self.agents.iter().map(|&(s, _)| at(s)).collect();
        let goals = self.agents.iter().map(|&(_, g)| at(g)).collect();
        Instance::new(grid.clone(), starts, goals).unwrap()
    }
}

/// The eight symmetries of the square acting on a `w x h` box; returns the
/// new box size and the cell map.
fn dihedral(w: usize, h: usize, k: usize) -> (usize, usize, Vec<u8>) {
    let transposed = k >= 4;
    let (nw, nh) = if transposed { (h, w) } else { (w, h) };
    let mut map = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut a, mut b) = if transposed { (y, x) } else { (x, y) };
            if k & 1 == 1 {
                a = nw - 1 - a;
            }
            if k & 2 == 2 {
                b = nh - 1 - b;
            }
            map[y * w + x] = (b * nw + a) as u8;
        }
    }
    (nw, nh, map)
}

fn map_mask(mask: u16, map: &[u8]) -> u16 {
    (0..map.len())
        .filter(|&c| mask >> c & 1 == 1)
        .fold(0, |m, c| m | 1 << map[c])
}

fn components(w: usize, h: usize, mask: u16) -> Vec<u8> {
    let mut label = vec![u8::MAX; w * h];
    let mut next = 0;
    for c in 0..w * h {
        if mask >> c & 1 == 0 || label[c] != u8::MAX {
            continue;
        }
        let mut stack = vec![c];
        label[c] = next;
        while let Some(v) = stack.pop() {
            let (x, y) = (v % w, v / w);
            let mut nb = Vec::new();
            if x > 0 {
                nb.push(v - 1);
            }
            if x + 1 < w {
                nb.push(v + 1);
            }
            if y > 0 {
                nb.push(v - w);
            }
            if y + 1 < h {
                nb.push(v + w);
            }
            for u in nb {
                if mask >> u & 1 == 1 && label[u] == u8::MAX {
                    label[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    label
}

/// Every instance on a grid of at most 3x3 cells with 2 or 3 agents whose
/// goals are reachable, deduplicated under grid symmetries and agent
/// relabeling. Returns the number of distinct cases and a seeded uniform
/// sample of at most `cap` of them.
pub fn small_cases(cap: usize, seed: u64) -> (usize, Vec<SmallCase>) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut reservoir: Vec<SmallCase> = Vec::with_capacity(cap.min(1 << 16));
    let mut total = 0usize;

    for w in 1..=3usize {
        for h in 1..=3usize {
            let cells = w * h;
            let syms: Vec<(usize, usize, Vec<u8>)> = (0..8).map(|k| dihedral(w, h, k)).collect();
            for mask in 1u16..(1 << cells) {
                // skip masks that are not the smallest image of their class
                let images: Vec<(usize, usize, u16)> = syms
                    .iter()
                    .map(|(nw, nh, m)| (*nw, *nh, map_mask(mask, m)))
                    .collect();
                if images.iter().any(|img| *img < (w, h, mask)) {
                    continue;
                }
                let stabilizer: Vec<&Vec<u8>> = syms
                    .iter()
                    .zip(&images)
                    .filter(|(_, img)| **img == (w, h, mask))
                    .map(|((_, _, m), _)| m)
                    .collect();
                let free: Vec<u8> = (0..cells as u8).filter(|&c| mask >> c & 1 == 1).collect();
                let comp = components(w, h, mask);
                for n in 2..=3usize {
                    if free.len() < n {
                        continue;
                    }
                    let mut seen = HashSet::new();
                    for_each_assignment(&free, n, &mut |agents: &[(u8, u8)]| {
                        if agents
                            .iter()
                            .any(|&(s, g)| comp[s as usize] != comp[g as usize])
                        {
                            return;
                        }
                        let canon = stabilizer
                            .iter()
                            .map(|m| {
                                let mut a: Vec<(u8, u8)> = agents
                                    .iter()
                                    .map(|&(s, g)| (m[s as usize], m[g as usize]))
                                    .collect();
                                a.sort_unstable();
                                a
                            })
                            .min()
                            .unwrap();
                        if !seen.insert(canon.clone()) {
                            return;
                        }
                        total += 1;
                        let case = SmallCase {
                            w,
                            h,
                            mask,
                            agents: canon,
                        };
                        if reservoir.len() < cap {
                            reservoir.push(case);
                        } else {
                            let j = rng.random_range(0..total);
                            if j < cap {
                                reservoir[j] = case;
                            }
                        }
                    });
                }
            }
        }
    }
    (total, reservoir)
}

fn for_each_assignment(free: &[u8], n: usize, f: &mut impl FnMut(&[(u8, u8)])) {
    fn rec(free: &[u8], n: usize, cur: &mut Vec<(u8, u8)>, f: &mut impl FnMut(&[(u8, u8)])) {
        if cur.len() == n {
            f(cur);
            return;
        }
        for &s in free {
            if cur.iter().any(|&(cs, _)| cs == s) {
                continue;
            }
            for &g in free {
                if cur.iter().any(|&(_, cg)| cg == g) {
                    continue;
                }
                cur.push((s, g));
                rec(free, n, cur, f);
                cur.pop();
            }
        }
    }
    rec(free, n, &mut Vec::with_capacity(n), f);
}
