//! MAPF instances and MovingAI `.scen` parsing.

use std::ops::Index;
use std::sync::Arc;

use thiserror::Error;

use crate::dist::{DistTable, UNREACHABLE};
use crate::grid::{Grid, VertexId};

/// Positions of all agents at one timestep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration(Vec<VertexId>);

impl Configuration {
    pub fn new(vertices: Vec<VertexId>) -> Self {
        Self(vertices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<VertexId> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, VertexId> {
        self.0.iter()
    }
}

impl Index<usize> for Configuration {
    type Output = VertexId;

    #[inline]
    fn index(&self, i: usize) -> &VertexId {
        &self.0[i]
    }
}

impl From<Vec<VertexId>> for Configuration {
    fn from(v: Vec<VertexId>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("start and goal counts differ ({starts} vs {goals})")]
    LengthMismatch { starts: usize, goals: usize },
    #[error("agents {first} and {second} share start vertex {vertex}")]
    DuplicateStart {
        first: usize,
        second: usize,
        vertex: VertexId,
    },
    #[error("agents {first} and {second} share goal vertex {vertex}")]
    DuplicateGoal {
        first: usize,
        second: usize,
        vertex: VertexId,
    },
    #[error("agent {agent}: vertex {vertex} does not exist")]
    InvalidVertex { agent: usize, vertex: VertexId },
    #[error("agent {agent}: goal is unreachable from start")]
    Unreachable { agent: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line 1: missing or malformed `version` line")]
    MissingVersion,
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("insufficient records: requested {requested} agents, scenario has {available}")]
    InsufficientRecords { requested: usize, available: usize },
    #[error("line {line}: {which} ({x}, {y}) is outside the map or blocked")]
    BlockedCell {
        line: usize,
        which: &'static str,
        x: usize,
        y: usize,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// One record of a `.scen` file. Coordinates are (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioRecord {
    pub line: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

/// Reads every record of a version-1 `.scen` file. The optimal-length
/// column is ignored.
pub fn parse_scenario_records(text: &str) -> Result<Vec<ScenarioRecord>, ScenarioError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim_start().starts_with("version") => {}
        _ => return Err(ScenarioError::MissingVersion),
    }

    let mut out = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = if content.contains('\t') {
            content.split('\t').collect()
        } else {
            content.split_whitespace().collect()
        };
        if fields.len() < 8 {
            return Err(ScenarioError::MalformedRecord {
                line,
                reason: format!("expected at least 8 fields, found {}", fields.len()),
            });
        }
        let num = |k: usize| {
            fields[k]
                .trim()
                .parse::<usize>()
                .map_err(|_| ScenarioError::MalformedRecord {
                    line,
                    reason: format!("field {} ({:?}) is not a coordinate", k + 1, fields[k]),
                })
        };
        out.push(ScenarioRecord {
            line,
            start: (num(4)?, num(5)?),
            goal: (num(6)?, num(7)?),
        });
    }
    Ok(out)
}

/// A validated MAPF instance.
#[derive(Debug, Clone)]
pub struct Instance {
    grid: Arc<Grid>,
    starts: Configuration,
    goals: Configuration,
    dist: Arc<DistTable>,
}

impl Instance {
    pub fn new(
        grid: Arc<Grid>,
        starts: Vec<VertexId>,
        goals: Vec<VertexId>,
    ) -> Result<Self, InstanceError> {
        let dist = Arc::new(DistTable::new(grid.clone()));
        Self::with_dist(grid, starts, goals, dist)
    }

    /// Like [`Instance::new`] but shares an existing distance cache, which
    /// must have been built for the same grid.
    pub fn with_dist(
        grid: Arc<Grid>,
        starts: Vec<VertexId>,
        goals: Vec<VertexId>,
        dist: Arc<DistTable>,
    ) -> Result<Self, InstanceError> {
        if starts.len() != goals.len() {
            return Err(InstanceError::LengthMismatch {
                starts: starts.len(),
                goals: goals.len(),
            });
        }
        let nv = grid.num_vertices();
        for (agent, (&s, &g)) in starts.iter().zip(&goals).enumerate() {
            for vertex in [s, g] {
                if vertex as usize >= nv {
                    return Err(InstanceError::InvalidVertex { agent, vertex });
                }
            }
        }
        let mut seen_start = vec![usize::MAX; nv];
        let mut seen_goal = vec![usize::MAX; nv];
        for (agent, (&s, &g)) in starts.iter().zip(&goals).enumerate() {
            if seen_start[s as usize] != usize::MAX {
                return Err(InstanceError::DuplicateStart {
                    first: seen_start[s as usize],
                    second: agent,
                    vertex: s,
                });
            }
            seen_start[s as usize] = agent;
            if seen_goal[g as usize] != usize::MAX {
                return Err(InstanceError::DuplicateGoal {
                    first: seen_goal[g as usize],
                    second: agent,
                    vertex: g,
                });
            }
            seen_goal[g as usize] = agent;
        }
        for (agent, (&s, &g)) in starts.iter().zip(&goals).enumerate() {
            if dist.get(s, g) == UNREACHABLE {
                return Err(InstanceError::Unreachable { agent });
            }
        }
        Ok(Self {
            grid,
            starts: Configuration::new(starts),
            goals: Configuration::new(goals),
            dist,
        })
    }

    /// Builds an instance from the first `n` records of a `.scen` file.
    pub fn from_scenario(grid: Arc<Grid>, text: &str, n: usize) -> Result<Self, ScenarioError> {
        let records = parse_scenario_records(text)?;
        Self::from_records(grid, &records, n)
    }

    pub fn from_records(
        grid: Arc<Grid>,
        records: &[ScenarioRecord],
        n: usize,
    ) -> Result<Self, ScenarioError> {
        if records.len() < n {
            return Err(ScenarioError::InsufficientRecords {
                requested: n,
                available: records.len(),
            });
        }
        let mut starts = Vec::with_capacity(n);
        let mut goals = Vec::with_capacity(n);
        for r in &records[..n] {
            let lookup = |which, (x, y): (usize, usize)| {
                grid.vertex_at(x, y).ok_or(ScenarioError::BlockedCell {
                    line: r.line,
                    which,
                    x,
                    y,
                })
            };
            starts.push(lookup("start", r.start)?);
            goals.push(lookup("goal", r.goal)?);
        }
        Ok(Self::new(grid, starts, goals)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn num_agents(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &Configuration {
        &self.starts
    }

    pub fn goals(&self) -> &Configuration {
        &self.goals
    }

    pub fn dist_table(&self) -> &Arc<DistTable> {
        &self.dist
    }

    /// Distance table towards agent `i`'s goal.
    #[inline]
    pub fn goal_dist(&self, i: usize) -> &[u32] {
        self.dist.table(self.goals[i])
    }

    #[inline]
    pub fn dist(&self, v: VertexId, g: VertexId) -> u32 {
        self.dist.get(v, g)
    }

    /// Sum of start-goal distances, the trivial flowtime lower bound.
    pub fn lower_bound(&self) -> u64 {
        (0..self.num_agents())
            .map(|i| self.goal_dist(i)[self.starts[i] as usize] as u64)
            .sum()
    }
}
