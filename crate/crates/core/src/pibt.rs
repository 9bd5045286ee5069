//! PIBT configuration generator with guidance-aware preferences and the
//! swap technique.

use rand::Rng;

use crate::grid::{Grid, VertexId, NO_VERTEX};
use crate::instance::{Configuration, Instance};

const NO_AGENT: u32 = u32::MAX;

/// Maximum number of candidates on a four-connected grid (4 moves + wait).
pub const MAX_CANDIDATES: usize = 5;

/// Fills `out` with `neighbors(here) ∪ {here}` sorted by
/// `⟨[v ≠ hint], dist(v), ε⟩` or, in swap mode, by `⟨−dist(v), ε⟩`.
/// One ε is drawn per candidate, neighbors first and the wait last.
pub fn build_preference<R: Rng + ?Sized>(
    grid: &Grid,
    here: VertexId,
    goal_dist: &[u32],
    hint: Option<VertexId>,
    swap_mode: bool,
    rng: &mut R,
    out: &mut Vec<VertexId>,
) {
    let mut keyed = [(0u8, 0i64, 0f64, 0 as VertexId); MAX_CANDIDATES];
    let mut len = 0;
    for &v in grid.neighbors(here).iter().chain(std::iter::once(&here)) {
        keyed[len] = (0, 0, rng.random::<f64>(), v);
        len += 1;
    }
    let keyed = &mut keyed[..len];
    for k in keyed.iter_mut() {
        let d = goal_dist[k.3 as usize] as i64;
        if swap_mode {
            k.1 = -d;
        } else {
            k.0 = u8::from(hint != Some(k.3));
            k.1 = d;
        }
    }
    keyed.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    out.clear();
    out.extend(keyed.iter().map(|k| k.3));
}

/// Dynamic PIBT priorities. Agents start at `dist(s_i, g_i) / |V|`, gain 1
/// per step spent away from their goal and drop back to the fractional
/// part once at the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityState {
    priorities: Vec<f64>,
}

impl PriorityState {
    pub fn initial(instance: &Instance, config: &Configuration) -> Self {
        let nv = instance.grid().num_vertices() as f64;
        let priorities = (0..instance.num_agents())
            .map(|i| instance.goal_dist(i)[config[i] as usize] as f64 / nv)
            .collect();
        Self { priorities }
    }

    /// Priorities for a successor configuration.
    pub fn advance(&self, instance: &Instance, config: &Configuration) -> Self {
        let priorities = self
            .priorities
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                if config[i] == instance.goals()[i] {
                    p.fract()
                } else {
                    p + 1.0
                }
            })
            .collect();
        Self { priorities }
    }

    pub fn values(&self) -> &[f64] {
        &self.priorities
    }

    /// Agents by descending priority, ties broken by ascending index.
    pub fn order(&self) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.priorities.len() as u32).collect();
        order.sort_by(|&a, &b| {
            self.priorities[b as usize]
                .total_cmp(&self.priorities[a as usize])
                .then(a.cmp(&b))
        });
        order
    }
}

/// Read-only view used by the swap predicates.
struct SwapView<'a> {
    grid: &'a Grid,
    instance: &'a Instance,
    occupied_now: &'a [u32],
}

impl SwapView<'_> {
    fn dist(&self, agent: u32, v: VertexId) -> u32 {
        self.instance.goal_dist(agent as usize)[v as usize]
    }

    /// Counts vertices next to `puller` that could receive it, ignoring
    /// `pusher` and dead ends occupied by agents resting at their goals.
    fn escape(&self, pusher: VertexId, puller: VertexId) -> (usize, VertexId) {
        let mut count = self.grid.degree(puller);
        let mut last = NO_VERTEX;
        for &u in self.grid.neighbors(puller) {
            let a = self.occupied_now[u as usize];
            let parked =
                self.grid.degree(u) == 1 && a != NO_AGENT && self.instance.goals()[a as usize] == u;
            if u == pusher || parked {
                count -= 1;
            } else {
                last = u;
            }
        }
        (count, last)
    }

    /// Whether `pusher` heading through `puller_origin` would end up
    /// mutually blocked with `puller` in a corridor.
    fn swap_required(
        &self,
        pusher: u32,
        puller: u32,
        pusher_origin: VertexId,
        puller_origin: VertexId,
    ) -> bool {
        let (mut v_pusher, mut v_puller) = (pusher_origin, puller_origin);
        while self.dist(pusher, v_puller) < self.dist(pusher, v_pusher) {
            let (count, next) = self.escape(v_pusher, v_puller);
            if count >= 2 {
                return false;
            }
            if count == 0 {
                break;
            }
            v_pusher = v_puller;
            v_puller = next;
        }
        self.dist(puller, v_pusher) < self.dist(puller, v_puller)
            && (self.dist(pusher, v_pusher) == 0
                || self.dist(pusher, v_puller) < self.dist(pusher, v_pusher))
    }

    /// Whether walking back from `puller_origin` reaches a branching vertex
    /// where the two agents can exchange order.
    fn swap_possible(&self, pusher_origin: VertexId, puller_origin: VertexId) -> bool {
        let (mut v_pusher, mut v_puller) = (pusher_origin, puller_origin);
        for _ in 0..=self.grid.num_vertices() {
            if v_puller == pusher_origin {
                return false;
            }
            let (count, next) = self.escape(v_pusher, v_puller);
            if count >= 2 {
                return true;
            }
            if count == 0 {
                return false;
            }
            v_pusher = v_puller;
            v_puller = next;
        }
        false
    }

    fn partner(
        &self,
        agent: u32,
        here: VertexId,
        first_choice: VertexId,
        undecided: impl Fn(u32) -> bool,
    ) -> Option<u32> {
        if first_choice == here {
            return None;
        }
        let aj = self.occupied_now[first_choice as usize];
        if aj != NO_AGENT
            && undecided(aj)
            && self.swap_required(agent, aj, here, first_choice)
            && self.swap_possible(first_choice, here)
        {
            return Some(aj);
        }
        for &u in self.grid.neighbors(here) {
            let ak = self.occupied_now[u as usize];
            if ak == NO_AGENT || u == first_choice {
                continue;
            }
            if self.swap_required(ak, agent, here, first_choice)
                && self.swap_possible(first_choice, here)
            {
                return Some(ak);
            }
        }
        None
    }
}

/// Swap partner of `agent` in configuration `q` when its preferred move is
/// `first_choice` and no agent has committed to a next vertex yet.
pub fn swap_needed(
    instance: &Instance,
    q: &Configuration,
    agent: usize,
    first_choice: VertexId,
) -> Option<usize> {
    let mut occupied_now = vec![NO_AGENT; instance.grid().num_vertices()];
    for (i, &v) in q.iter().enumerate() {
        occupied_now[v as usize] = i as u32;
    }
    let view = SwapView {
        grid: instance.grid(),
        instance,
        occupied_now: &occupied_now,
    };
    view.partner(agent as u32, q[agent], first_choice, |_| true)
        .map(|a| a as usize)
}

/// Reusable PIBT workspace for one instance.
pub struct Pibt {
    swap: bool,
    pushed_hints: bool,
    occupied_now: Vec<u32>,
    occupied_next: Vec<u32>,
    next: Vec<VertexId>,
    prefs: Vec<Vec<VertexId>>,
    calls: u64,
}

impl Pibt {
    pub fn new(instance: &Instance, swap: bool) -> Self {
        let nv = instance.grid().num_vertices();
        let n = instance.num_agents();
        Self {
            swap,
            pushed_hints: true,
            occupied_now: vec![NO_AGENT; nv],
            occupied_next: vec![NO_AGENT; nv],
            next: vec![NO_VERTEX; n],
            prefs: vec![Vec::with_capacity(MAX_CANDIDATES); n],
            calls: 0,
        }
    }

    /// Whether agents pushed by priority inheritance still try their hint
    /// first. On by default.
    pub fn set_pushed_hints(&mut self, on: bool) {
        self.pushed_hints = on;
    }

    /// Total recursive planning calls so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Generates a successor of `q`. Agents named in `constraints` are
    /// forced to their vertex; the rest are planned by PIBT in `order`.
    /// `hints[i]` is agent `i`'s guided next vertex or [`NO_VERTEX`].
    /// Returns `None` when the constraints cannot be completed.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        q: &Configuration,
        order: &[u32],
        constraints: &[(u32, VertexId)],
        hints: &[VertexId],
        rng: &mut R,
    ) -> Option<Configuration> {
        for (i, &v) in q.iter().enumerate() {
            self.occupied_now[v as usize] = i as u32;
        }
        let ok = self.assign(instance, q, order, constraints, hints, rng);
        let result = ok.then(|| Configuration::new(self.next.clone()));

        for &v in q.iter() {
            self.occupied_now[v as usize] = NO_AGENT;
        }
        for v in self.next.iter_mut() {
            if *v != NO_VERTEX {
                self.occupied_next[*v as usize] = NO_AGENT;
                *v = NO_VERTEX;
            }
        }
        result
    }

    fn assign<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        q: &Configuration,
        order: &[u32],
        constraints: &[(u32, VertexId)],
        hints: &[VertexId],
        rng: &mut R,
    ) -> bool {
        for &(i, v) in constraints {
            debug_assert!(v == q[i as usize] || instance.grid().are_adjacent(q[i as usize], v));
            if self.occupied_next[v as usize] != NO_AGENT {
                return false;
            }
            let mover = self.occupied_next[q[i as usize] as usize];
            if mover != NO_AGENT && mover == self.occupied_now[v as usize] {
                return false;
            }
            self.next[i as usize] = v;
            self.occupied_next[v as usize] = i;
        }
        for &i in order {
            if self.next[i as usize] == NO_VERTEX && !self.plan(instance, q, i, hints, true, rng) {
                return false;
            }
        }
        true
    }

    fn plan<R: Rng + ?Sized>(
        &mut self,
        instance: &Instance,
        q: &Configuration,
        i: u32,
        hints: &[VertexId],
        use_hint: bool,
        rng: &mut R,
    ) -> bool {
        self.calls += 1;
        let grid = instance.grid();
        let here = q[i as usize];
        let goal_dist = instance.goal_dist(i as usize);
        let hint = hints
            .get(i as usize)
            .copied()
            .filter(|&h| h != NO_VERTEX && use_hint);

        let mut pref = std::mem::take(&mut self.prefs[i as usize]);
        build_preference(grid, here, goal_dist, hint, false, rng, &mut pref);

        let mut swap_agent = None;
        if self.swap {
            let view = SwapView {
                grid,
                instance,
                occupied_now: &self.occupied_now,
            };
            let next = &self.next;
            swap_agent = view.partner(i, here, pref[0], |a| next[a as usize] == NO_VERTEX);
            if swap_agent.is_some() {
                build_preference(grid, here, goal_dist, None, true, rng, &mut pref);
            }
        }

        for k in 0..pref.len() {
            let u = pref[k];
            if self.occupied_next[u as usize] != NO_AGENT {
                continue;
            }
            let ak = self.occupied_now[u as usize];
            if ak != NO_AGENT && self.next[ak as usize] == here {
                continue;
            }
            self.occupied_next[u as usize] = i;
            self.next[i as usize] = u;
            if ak != NO_AGENT
                && ak != i
                && self.next[ak as usize] == NO_VERTEX
                && !self.plan(instance, q, ak, hints, self.pushed_hints, rng)
            {
                continue;
            }
            if k == 0 {
                if let Some(sa) = swap_agent {
                    let sa_here = q[sa as usize];
                    if self.next[sa as usize] == NO_VERTEX
                        && self.occupied_next[here as usize] == NO_AGENT
                        && u != sa_here
                    {
                        self.next[sa as usize] = here;
                        self.occupied_next[here as usize] = sa;
                    }
                }
            }
            self.prefs[i as usize] = pref;
            return true;
        }

        self.occupied_next[here as usize] = i;
        self.next[i as usize] = here;
        self.prefs[i as usize] = pref;
        false
    }
}
