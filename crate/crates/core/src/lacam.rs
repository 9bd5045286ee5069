//! LaCAM: depth-first search over configurations with lazily enumerated
//! low-level constraints and PIBT as the successor generator.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::global_guidance::{build_suo, GlobalGuidance, SuoParams};
use crate::grid::{VertexId, NO_VERTEX};
use crate::instance::{Configuration, Instance};
use crate::local_guidance::{Guidance, GuidanceBuilder, GuidanceParams, ParamsError};
use crate::pibt::{build_preference, Pibt, PriorityState};
use crate::solution::Solution;

/// Which guidance biases PIBT's first choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GuidanceMode {
    None,
    Global,
    Local,
    Both,
}

impl GuidanceMode {
    pub const ALL: [GuidanceMode; 4] = [Self::None, Self::Global, Self::Local, Self::Both];

    pub fn uses_local(self) -> bool {
        matches!(self, Self::Local | Self::Both)
    }

    pub fn uses_global(self) -> bool {
        matches!(self, Self::Global | Self::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Global => "global",
            Self::Local => "local",
            Self::Both => "both",
        }
    }
}

impl fmt::Display for GuidanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GuidanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "global" => Ok(Self::Global),
            "local" => Ok(Self::Local),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown guidance mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub mode: GuidanceMode,
    pub guidance: GuidanceParams,
    pub suo: SuoParams,
    pub swap: bool,
    pub seed: u64,
    /// Upper bound on generated high-level nodes.
    pub node_limit: Option<usize>,
    /// Rebuild local guidance every this many generations; in between the
    /// parent's guidance is only shifted. 1 rebuilds at every generation.
    pub guidance_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: GuidanceMode::None,
            guidance: GuidanceParams::default(),
            suo: SuoParams::default(),
            swap: true,
            seed: 0,
            node_limit: None,
            guidance_interval: 1,
        }
    }
}

impl SolverOptions {
    pub fn with_mode(mode: GuidanceMode) -> Self {
        Self {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("time limit reached")]
    Timeout,
    #[error("node limit reached")]
    NodeLimit,
    #[error("no solution exists")]
    Unsolvable,
    #[error("invalid guidance parameters: {0}")]
    InvalidParams(#[from] ParamsError),
    #[error("guidance interval must be at least 1")]
    InvalidInterval,
}

/// Wall-clock budget.
#[derive(Debug, Clone, Copy)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Self(None)
    }

    pub fn after(budget: Duration) -> Self {
        Self(Some(Instant::now() + budget))
    }

    pub fn at(instant: Instant) -> Self {
        Self(Some(instant))
    }

    pub fn expired(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.0.map(|t| t.saturating_duration_since(Instant::now()))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub high_level_nodes: usize,
    pub low_level_expansions: u64,
    pub pibt_failures: u64,
    pub revisits: u64,
    pub guidance_builds: u64,
    pub guidance_expansions: u64,
    pub elapsed: Duration,
}

struct HighLevelNode {
    config: Configuration,
    parent: Option<u32>,
    depth: usize,
    priorities: PriorityState,
    order: Vec<u32>,
    low: VecDeque<Vec<(u32, VertexId)>>,
    guidance: Option<Guidance>,
    hints: Vec<VertexId>,
}

type GuidanceObserver<'a> = Box<dyn FnMut(&Configuration, &Guidance) + 'a>;

/// A LaCAM solver bound to one instance.
pub struct Solver<'a> {
    instance: &'a Instance,
    options: SolverOptions,
    rng: ChaCha8Rng,
    pibt: Pibt,
    builder: Option<GuidanceBuilder>,
    global: Option<Arc<GlobalGuidance>>,
    stats: SolveStats,
    observer: Option<GuidanceObserver<'a>>,
    pref_buf: Vec<VertexId>,
}

impl<'a> Solver<'a> {
    pub fn new(instance: &'a Instance, options: SolverOptions) -> Result<Self, SolveError> {
        let mut options = options;
        options.guidance.use_global = options.mode == GuidanceMode::Both;
        if options.mode.uses_local() {
            options.guidance.validate()?;
        }
        if options.guidance_interval == 0 {
            return Err(SolveError::InvalidInterval);
        }
        let builder = options
            .mode
            .uses_local()
            .then(|| GuidanceBuilder::new(instance.grid(), options.guidance.window));
        Ok(Self {
            instance,
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            pibt: Pibt::new(instance, options.swap),
            builder,
            global: None,
            stats: SolveStats::default(),
            observer: None,
            pref_buf: Vec::new(),
            options,
        })
    }

    /// Supplies precomputed global guidance instead of building it by SUO.
    pub fn set_global_guidance(&mut self, global: Arc<GlobalGuidance>) {
        assert_eq!(global.num_agents(), self.instance.num_agents());
        self.global = Some(global);
    }

    /// Called with every local guidance constructed during the search.
    pub fn set_guidance_observer(&mut self, observer: impl FnMut(&Configuration, &Guidance) + 'a) {
        self.observer = Some(Box::new(observer));
    }

    pub fn global_guidance(&self) -> Option<&Arc<GlobalGuidance>> {
        self.global.as_ref()
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    fn create_node(
        &mut self,
        config: Configuration,
        parent: Option<&HighLevelNode>,
        parent_id: Option<u32>,
    ) -> HighLevelNode {
        let instance = self.instance;
        let n = instance.num_agents();
        let priorities = match parent {
            Some(p) => p.priorities.advance(instance, &config),
            None => PriorityState::initial(instance, &config),
        };
        let order = priorities.order();
        let depth = parent.map_or(0, |p| p.depth + 1);

        let mut hints = Vec::new();
        let mut guidance = None;
        if let Some(builder) = self.builder.as_mut() {
            let params = &self.options.guidance;
            let sweeps = match parent {
                None => params.root_iterations,
                Some(_) if depth.is_multiple_of(self.options.guidance_interval) => {
                    params.iterations
                }
                Some(_) => 0,
            };
            let global = self.global.as_deref();
            let phi = builder.build(
                instance,
                &config,
                parent.and_then(|p| p.guidance.as_ref()),
                global,
                params,
                sweeps,
            );
            if let Some(obs) = self.observer.as_mut() {
                obs(&config, &phi);
            }
            phi.fill_hints(&mut hints);
            guidance = Some(phi);
        } else if let Some(global) = self.global.as_deref() {
            hints = (0..n)
                .map(|i| global.next_on_path(i, config[i]).unwrap_or(NO_VERTEX))
                .collect();
        }

        let mut low = VecDeque::new();
        low.push_back(Vec::new());
        HighLevelNode {
            config,
            parent: parent_id,
            depth,
            priorities,
            order,
            low,
            guidance,
            hints,
        }
    }

    /// Runs the search until the goal configuration is reached, the
    /// configuration space is exhausted, or a budget runs out.
    pub fn solve(&mut self, deadline: Deadline) -> Result<Solution, SolveError> {
        let started = Instant::now();
        let result = self.search(deadline);
        self.stats.elapsed = started.elapsed();
        if let Some(b) = &self.builder {
            self.stats.guidance_builds = b.builds();
            self.stats.guidance_expansions = b.expansions();
        }
        result
    }

    fn search(&mut self, deadline: Deadline) -> Result<Solution, SolveError> {
        let instance = self.instance;
        let n = instance.num_agents();
        let goals = instance.goals().clone();

        if self.options.mode.uses_global() && self.global.is_none() {
            self.global = Some(Arc::new(build_suo(instance, self.options.suo)));
            if deadline.expired() {
                return Err(SolveError::Timeout);
            }
        }

        let mut nodes: Vec<HighLevelNode> = Vec::new();
        let mut explored: FxHashMap<Configuration, u32> = FxHashMap::default();
        let root = self.create_node(instance.starts().clone(), None, None);
        explored.insert(root.config.clone(), 0);
        nodes.push(root);
        let mut open: Vec<u32> = vec![0];
        self.stats.high_level_nodes = 1;

        loop {
            if deadline.expired() {
                return Err(SolveError::Timeout);
            }
            let Some(&top) = open.last() else {
                return Err(SolveError::Unsolvable);
            };
            let node = &mut nodes[top as usize];
            if node.config == goals {
                return Ok(extract_solution(&nodes, top));
            }
            let Some(constraints) = node.low.pop_front() else {
                open.pop();
                continue;
            };
            self.stats.low_level_expansions += 1;

            if constraints.len() < n {
                let agent = node.order[constraints.len()];
                let here = node.config[agent as usize];
                let hint = node
                    .hints
                    .get(agent as usize)
                    .copied()
                    .filter(|&h| h != NO_VERTEX);
                build_preference(
                    instance.grid(),
                    here,
                    instance.goal_dist(agent as usize),
                    hint,
                    false,
                    &mut self.rng,
                    &mut self.pref_buf,
                );
                for &u in &self.pref_buf {
                    let mut child = Vec::with_capacity(constraints.len() + 1);
                    child.extend_from_slice(&constraints);
                    child.push((agent, u));
                    node.low.push_back(child);
                }
            }

            let node = &nodes[top as usize];
            // pushed agents follow hints only on a node's first successor;
            // later successors fall back to plain distances so a stuck
            // neighborhood can reorder
            self.pibt.set_pushed_hints(constraints.is_empty());
            let Some(next) = self.pibt.step(
                instance,
                &node.config,
                &node.order,
                &constraints,
                &node.hints,
                &mut self.rng,
            ) else {
                self.stats.pibt_failures += 1;
                continue;
            };

            if let Some(&existing) = explored.get(&next) {
                self.stats.revisits += 1;
                open.push(existing);
                continue;
            }
            if self
                .options
                .node_limit
                .is_some_and(|limit| nodes.len() >= limit)
            {
                return Err(SolveError::NodeLimit);
            }
            let id = nodes.len() as u32;
            let child = self.create_node(next, Some(&nodes[top as usize]), Some(top));
            explored.insert(child.config.clone(), id);
            nodes.push(child);
            open.push(id);
            self.stats.high_level_nodes = nodes.len();
        }
    }
}

fn extract_solution(nodes: &[HighLevelNode], goal: u32) -> Solution {
    let mut configs = Vec::new();
    let mut cur = Some(goal);
    while let Some(id) = cur {
        configs.push(nodes[id as usize].config.clone());
        cur = nodes[id as usize].parent;
    }
    configs.reverse();
    Solution::new(configs)
}

/// Solves `instance` with a fresh solver.
pub fn solve(
    instance: &Instance,
    options: SolverOptions,
    deadline: Deadline,
) -> Result<Solution, SolveError> {
    Solver::new(instance, options)?.solve(deadline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::validate::validate;

    fn grid(w: usize, h: usize) -> Arc<Grid> {
        Arc::new(Grid::from_mask(w, h, &vec![true; w * h]).unwrap())
    }

    #[test]
    fn corridor_single_agent() {
        let inst = Instance::new(grid(4, 1), vec![0], vec![3]).unwrap();
        for mode in GuidanceMode::ALL {
            let sol = solve(&inst, SolverOptions::with_mode(mode), Deadline::none()).unwrap();
            assert_eq!(sol.configs().len(), 4);
            assert_eq!(sol.flowtime(), 3);
        }
    }

    #[test]
    fn corridor_swap_is_unsolvable() {
        let inst = Instance::new(grid(3, 1), vec![0, 2], vec![2, 0]).unwrap();
        for mode in GuidanceMode::ALL {
            assert_eq!(
                solve(&inst, SolverOptions::with_mode(mode), Deadline::none()),
                Err(SolveError::Unsolvable)
            );
        }
    }

    #[test]
    fn already_at_goals() {
        let inst = Instance::new(grid(3, 3), vec![0, 4], vec![0, 4]).unwrap();
        let sol = solve(&inst, SolverOptions::default(), Deadline::none()).unwrap();
        assert_eq!(sol.configs().len(), 1);
        assert_eq!(sol.flowtime(), 0);
    }

    #[test]
    fn goal_node_with_root_parent() {
        let inst = Instance::new(grid(2, 1), vec![0], vec![1]).unwrap();
        let sol = solve(&inst, SolverOptions::default(), Deadline::none()).unwrap();
        assert_eq!(sol.configs().len(), 2);
    }

    #[test]
    fn zero_budget_times_out() {
        let inst = Instance::new(grid(4, 4), vec![0], vec![15]).unwrap();
        assert_eq!(
            solve(
                &inst,
                SolverOptions::default(),
                Deadline::after(Duration::ZERO)
            ),
            Err(SolveError::Timeout)
        );
    }

    #[test]
    fn node_limit_is_reported() {
        let inst = Instance::new(grid(8, 1), vec![0], vec![7]).unwrap();
        let opts = SolverOptions {
            node_limit: Some(3),
            ..Default::default()
        };
        assert_eq!(
            solve(&inst, opts, Deadline::none()),
            Err(SolveError::NodeLimit)
        );
    }

    #[test]
    fn one_guidance_build_per_node() {
        let inst = Instance::new(grid(5, 5), vec![0, 24, 4], vec![24, 0, 20]).unwrap();
        let mut solver = Solver::new(&inst, SolverOptions::with_mode(GuidanceMode::Local)).unwrap();
        let sol = solver.solve(Deadline::none()).unwrap();
        validate(&inst, &sol).unwrap();
        let stats = solver.stats().clone();
        assert_eq!(stats.guidance_builds as usize, stats.high_level_nodes);
    }

    #[test]
    fn invalid_options_rejected() {
        let inst = Instance::new(grid(2, 1), vec![0], vec![1]).unwrap();
        let mut opts = SolverOptions::with_mode(GuidanceMode::Local);
        opts.guidance.window = 0;
        assert!(matches!(
            Solver::new(&inst, opts),
            Err(SolveError::InvalidParams(_))
        ));
        let opts = SolverOptions {
            guidance_interval: 0,
            ..Default::default()
        };
        assert!(matches!(
            Solver::new(&inst, opts),
            Err(SolveError::InvalidInterval)
        ));
    }

    #[test]
    fn mode_round_trip() {
        for mode in GuidanceMode::ALL {
            assert_eq!(mode.as_str().parse::<GuidanceMode>(), Ok(mode));
        }
        assert!("fancy".parse::<GuidanceMode>().is_err());
    }
}
