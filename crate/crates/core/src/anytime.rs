//! Anytime refinement by large neighborhood search: a random subset of
//! agents is replanned with prioritized planning against everyone else's
//! paths, and the result is kept only when flowtime strictly drops.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::grid::VertexId;
use crate::instance::Instance;
use crate::lacam::Deadline;
use crate::solution::Solution;
use crate::validate::validate;

/// How the agents to replan are picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetStrategy {
    /// Size uniform in `1..=max_subset`, members uniform without replacement.
    Uniform { max_subset: usize },
}

impl Default for SubsetStrategy {
    fn default() -> Self {
        Self::Uniform { max_subset: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LnsOptions {
    pub workers: usize,
    pub seed: u64,
    pub strategy: SubsetStrategy,
    /// Stop after this many proposals even if time remains.
    pub max_proposals: Option<u64>,
    /// Node budget of one single-agent search.
    pub max_expansions: usize,
}

impl Default for LnsOptions {
    fn default() -> Self {
        Self {
            workers: 4,
            seed: 0,
            strategy: SubsetStrategy::default(),
            max_proposals: None,
            max_expansions: 200_000,
        }
    }
}

/// Incumbent flowtime after an accepted proposal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub proposal: u64,
    pub flowtime: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub solution: Solution,
    pub trace: Vec<TracePoint>,
    pub proposals: u64,
    pub accepted: u64,
}

/// Serializes a trace as CSV. Without the time column the output is a pure
/// function of the seed and proposal budget.
pub fn trace_csv(trace: &[TracePoint], include_time: bool) -> String {
    let mut out = String::from(if include_time {
        "proposal,flowtime,elapsed_ms\n"
    } else {
        "proposal,flowtime\n"
    });
    for p in trace {
        if include_time {
            let _ = writeln!(
                out,
                "{},{},{:.3}",
                p.proposal,
                p.flowtime,
                p.elapsed.as_secs_f64() * 1e3
            );
        } else {
            let _ = writeln!(out, "{},{}", p.proposal, p.flowtime);
        }
    }
    out
}

fn flowtime(paths: &[Vec<VertexId>]) -> u64 {
    Solution::from_paths(paths).flowtime()
}

#[inline]
fn key(v: VertexId, t: usize) -> u64 {
    (t as u64) << 32 | v as u64
}

/// Space-time occupancy of the agents whose paths are fixed.
struct Reservations {
    occ: FxHashMap<u64, u32>,
    /// Time from which a finished agent sits on this vertex for good.
    rest_from: Vec<usize>,
    /// One past the last time any path steps on this vertex.
    free_after: Vec<usize>,
}

impl Reservations {
    fn new(nv: usize) -> Self {
        Self {
            occ: FxHashMap::default(),
            rest_from: vec![usize::MAX; nv],
            free_after: vec![0; nv],
        }
    }

    fn add(&mut self, agent: usize, path: &[VertexId]) {
        let last = path.len() - 1;
        for (t, &v) in path[..last].iter().enumerate() {
            self.occ.insert(key(v, t), agent as u32);
            let f = &mut self.free_after[v as usize];
            *f = (*f).max(t + 1);
        }
        let g = path[last] as usize;
        self.rest_from[g] = last;
        self.free_after[g] = self.free_after[g].max(last + 1);
    }

    fn blocked(&self, v: VertexId, t: usize) -> bool {
        self.rest_from[v as usize] <= t || self.occ.contains_key(&key(v, t))
    }

    /// Whether moving `from -> to` during `t -> t+1` swaps with someone.
    fn swaps(&self, paths: &[Vec<VertexId>], from: VertexId, to: VertexId, t: usize) -> bool {
        self.occ.get(&key(to, t)).is_some_and(|&j| {
            let p = &paths[j as usize];
            p[(t + 1).min(p.len() - 1)] == from
        })
    }
}

/// Minimum-arrival path for `agent` that avoids all reservations and can
/// rest at its goal forever afterwards.
fn plan_single(
    instance: &Instance,
    agent: usize,
    res: &Reservations,
    paths: &[Vec<VertexId>],
    horizon: usize,
    max_expansions: usize,
    deadline: Deadline,
) -> Option<Vec<VertexId>> {
    let grid = instance.grid();
    let start = instance.starts()[agent];
    let goal = instance.goals()[agent];
    let h = instance.goal_dist(agent);
    let mut open = BinaryHeap::new();
    let mut parent: FxHashMap<u64, u64> = FxHashMap::default();
    let mut closed: FxHashSet<u64> = FxHashSet::default();
    open.push(Reverse((
        h[start as usize] as usize,
        Reverse(0usize),
        start,
    )));
    parent.insert(key(start, 0), u64::MAX);
    let mut expansions = 0usize;

    while let Some(Reverse((_, Reverse(t), v))) = open.pop() {
        let k = key(v, t);
        if !closed.insert(k) {
            continue;
        }
        if v == goal && t >= res.free_after[goal as usize] {
            let mut path = Vec::with_capacity(t + 1);
            let mut cur = k;
            while cur != u64::MAX {
                path.push(cur as u32);
                cur = parent[&cur];
            }
            path.reverse();
            return Some(path);
        }
        expansions += 1;
        if expansions > max_expansions || (expansions.is_multiple_of(4096) && deadline.expired()) {
            return None;
        }
        if t >= horizon {
            continue;
        }
        let nt = t + 1;
        for &u in grid.neighbors(v).iter().chain(std::iter::once(&v)) {
            let nk = key(u, nt);
            if closed.contains(&nk) || res.blocked(u, nt) || (u != v && res.swaps(paths, v, u, t)) {
                continue;
            }
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(nk) {
                e.insert(k);
                open.push(Reverse((nt + h[u as usize] as usize, Reverse(nt), u)));
            }
        }
    }
    None
}

/// Replans `subset` one by one in random order, each against every other
/// agent's current path. Returns the new paths of the subset, in the order
/// of `subset`, or `None` when some agent cannot be routed.
pub fn pp_repair<R: Rng + ?Sized>(
    instance: &Instance,
    paths: &[Vec<VertexId>],
    subset: &[usize],
    rng: &mut R,
    max_expansions: usize,
    deadline: Deadline,
) -> Option<Vec<Vec<VertexId>>> {
    let n = instance.num_agents();
    let mut in_subset = vec![false; n];
    for &i in subset {
        in_subset[i] = true;
    }
    let mut working: Vec<Vec<VertexId>> = paths.to_vec();
    let mut res = Reservations::new(instance.grid().num_vertices());
    for (i, p) in paths.iter().enumerate() {
        if !in_subset[i] {
            res.add(i, p);
        }
    }
    let makespan = paths.iter().map(|p| p.len() - 1).max().unwrap_or(0);
    let horizon = makespan + instance.grid().num_vertices();

    let mut order = subset.to_vec();
    order.shuffle(rng);
    for &i in &order {
        let path = plan_single(
            instance,
            i,
            &res,
            &working,
            horizon,
            max_expansions,
            deadline,
        )?;
        res.add(i, &path);
        working[i] = path;
    }
    Some(
        subset
            .iter()
            .map(|&i| std::mem::take(&mut working[i]))
            .collect(),
    )
}

struct Incumbent {
    paths: Arc<Vec<Vec<VertexId>>>,
    flowtime: u64,
    version: u64,
    trace: Vec<TracePoint>,
    accepted: u64,
}

struct Shared<'a> {
    instance: &'a Instance,
    options: &'a LnsOptions,
    deadline: Deadline,
    started: Instant,
    proposals: AtomicU64,
    incumbent: Mutex<Incumbent>,
}

fn pick_subset<R: Rng + ?Sized>(strategy: SubsetStrategy, n: usize, rng: &mut R) -> Vec<usize> {
    match strategy {
        SubsetStrategy::Uniform { max_subset } => {
            let size = rng.random_range(1..=max_subset.clamp(1, n));
            index::sample(rng, n, size).into_vec()
        }
    }
}

fn worker(shared: &Shared<'_>, seed: u64) {
    let instance = shared.instance;
    let n = instance.num_agents();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if shared.deadline.expired() {
            return;
        }
        let proposal = shared.proposals.fetch_add(1, Ordering::Relaxed) + 1;
        if shared.options.max_proposals.is_some_and(|m| proposal > m) {
            return;
        }
        let (snapshot, version) = {
            let inc = shared.incumbent.lock().unwrap();
            (inc.paths.clone(), inc.version)
        };
        let subset = pick_subset(shared.options.strategy, n, &mut rng);
        let Some(replacement) = pp_repair(
            instance,
            &snapshot,
            &subset,
            &mut rng,
            shared.options.max_expansions,
            shared.deadline,
        ) else {
            continue;
        };

        let mut inc = shared.incumbent.lock().unwrap();
        let base: &[Vec<VertexId>] = if inc.version == version {
            &snapshot
        } else {
            &inc.paths
        };
        let mut merged = base.to_vec();
        for (&i, p) in subset.iter().zip(replacement) {
            merged[i] = p;
        }
        let ft = flowtime(&merged);
        if ft >= inc.flowtime {
            continue;
        }
        // Replacements planned against an older incumbent may collide with
        // paths installed since.
        if inc.version != version && validate(instance, &Solution::from_paths(&merged)).is_err() {
            continue;
        }
        inc.paths = Arc::new(merged);
        inc.flowtime = ft;
        inc.version += 1;
        inc.accepted += 1;
        let elapsed = shared.started.elapsed();
        inc.trace.push(TracePoint {
            proposal,
            flowtime: ft,
            elapsed,
        });
    }
}

/// Improves `initial` until the deadline or proposal budget runs out. The
/// returned flowtime never exceeds the initial one.
pub fn refine(
    instance: &Instance,
    initial: &Solution,
    deadline: Deadline,
    options: &LnsOptions,
) -> RefineOutcome {
    let started = Instant::now();
    let paths: Vec<Vec<VertexId>> = initial.trimmed_paths();
    let ft = flowtime(&paths);
    let shared = Shared {
        instance,
        options,
        deadline,
        started,
        proposals: AtomicU64::new(0),
        incumbent: Mutex::new(Incumbent {
            paths: Arc::new(paths),
            flowtime: ft,
            version: 0,
            trace: vec![TracePoint {
                proposal: 0,
                flowtime: ft,
                elapsed: Duration::ZERO,
            }],
            accepted: 0,
        }),
    };

    if instance.num_agents() > 0 {
        let workers = options.workers.max(1);
        if workers == 1 {
            worker(&shared, options.seed);
        } else {
            std::thread::scope(|s| {
                for w in 0..workers {
                    let shared = &shared;
                    s.spawn(move || worker(shared, options.seed.wrapping_add(w as u64)));
                }
            });
        }
    }

    let proposals = shared.proposals.load(Ordering::Relaxed);
    let inc = shared.incumbent.into_inner().unwrap();
    let proposals = options
        .max_proposals
        .map_or(proposals, |m| proposals.min(m));
    RefineOutcome {
        solution: Solution::from_paths(&inc.paths),
        trace: inc.trace,
        proposals,
        accepted: inc.accepted,
    }
}
