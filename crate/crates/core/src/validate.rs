//! Independent solution checker.

use thiserror::Error;

use crate::grid::VertexId;
use crate::instance::Instance;
use crate::solution::Solution;

/// First problem found in a candidate solution.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Violation {
    #[error("solution has no configurations")]
    Empty,
    #[error("t={t}: configuration has {found} agents, expected {expected}")]
    AgentCount {
        t: usize,
        expected: usize,
        found: usize,
    },
    #[error("t={t}: agent {agent} is at vertex {vertex}, which does not exist")]
    InvalidVertex {
        t: usize,
        agent: usize,
        vertex: VertexId,
    },
    #[error("agent {agent} does not start at its start vertex")]
    StartMismatch { agent: usize },
    #[error("agent {agent} does not end at its goal vertex")]
    GoalMismatch { agent: usize },
    #[error("t={t}: agent {agent} jumps from {from} to non-adjacent {to}")]
    InvalidMove {
        t: usize,
        agent: usize,
        from: VertexId,
        to: VertexId,
    },
    #[error("t={t}: agents {first} and {second} both occupy vertex {vertex}")]
    VertexCollision {
        t: usize,
        first: usize,
        second: usize,
        vertex: VertexId,
    },
    #[error("t={t}..{}: agents {first} and {second} swap vertices", t + 1)]
    EdgeSwap {
        t: usize,
        first: usize,
        second: usize,
    },
}

/// Checks start/goal agreement, per-step adjacency, vertex collisions and
/// edge swaps. Returns the earliest violation.
pub fn validate(instance: &Instance, solution: &Solution) -> Result<(), Violation> {
    let configs = solution.configs();
    let n = instance.num_agents();
    let grid = instance.grid();
    let nv = grid.num_vertices();
    if configs.is_empty() {
        return Err(Violation::Empty);
    }

    let mut occupant = vec![usize::MAX; nv];
    for (t, config) in configs.iter().enumerate() {
        if config.len() != n {
            return Err(Violation::AgentCount {
                t,
                expected: n,
                found: config.len(),
            });
        }
        if let Some(agent) = config.iter().position(|&v| v as usize >= nv) {
            return Err(Violation::InvalidVertex {
                t,
                agent,
                vertex: config[agent],
            });
        }
        if t == 0 {
            if let Some(agent) = (0..n).find(|&i| config[i] != instance.starts()[i]) {
                return Err(Violation::StartMismatch { agent });
            }
        } else {
            let prev = &configs[t - 1];
            for agent in 0..n {
                let (from, to) = (prev[agent], config[agent]);
                if from != to && !grid.are_adjacent(from, to) {
                    return Err(Violation::InvalidMove {
                        t: t - 1,
                        agent,
                        from,
                        to,
                    });
                }
            }
        }

        for (agent, &v) in config.iter().enumerate() {
            let other = occupant[v as usize];
            if other != usize::MAX {
                return Err(Violation::VertexCollision {
                    t,
                    first: other,
                    second: agent,
                    vertex: v,
                });
            }
            occupant[v as usize] = agent;
        }

        if t > 0 {
            // occupant currently maps vertices of Q_t; look up who is now at
            // each agent's previous vertex
            let prev = &configs[t - 1];
            for agent in 0..n {
                let (from, to) = (prev[agent], config[agent]);
                if from == to {
                    continue;
                }
                let other = occupant[from as usize];
                if other != usize::MAX && other != agent && prev[other] == to {
                    return Err(Violation::EdgeSwap {
                        t: t - 1,
                        first: agent.min(other),
                        second: agent.max(other),
                    });
                }
            }
        }

        for &v in config.iter() {
            occupant[v as usize] = usize::MAX;
        }
    }

    let last = configs.last().expect("non-empty");
    if let Some(agent) = (0..n).find(|&i| last[i] != instance.goals()[i]) {
        return Err(Violation::GoalMismatch { agent });
    }
    Ok(())
}
