use crate::grid::VertexId;
use crate::instance::Configuration;

/// A plan as a sequence of configurations `Q_0 .. Q_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    configs: Vec<Configuration>,
}

impl Solution {
    pub fn new(configs: Vec<Configuration>) -> Self {
        Self { configs }
    }

    /// Builds a solution from per-agent paths, padding shorter paths by
    /// waiting at their last vertex.
    pub fn from_paths(paths: &[Vec<VertexId>]) -> Self {
        let horizon = paths.iter().map(Vec::len).max().unwrap_or(0);
        let configs = (0..horizon)
            .map(|t| {
                paths
                    .iter()
                    .map(|p| *p.get(t).or(p.last()).expect("empty agent path"))
                    .collect::<Vec<_>>()
                    .into()
            })
            .collect();
        Self { configs }
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn num_agents(&self) -> usize {
        self.configs.first().map_or(0, Configuration::len)
    }

    /// Number of timesteps `T` (one less than the number of configurations).
    pub fn makespan(&self) -> usize {
        self.configs.len().saturating_sub(1)
    }

    pub fn position(&self, agent: usize, t: usize) -> VertexId {
        self.configs[t][agent]
    }

    /// Per-agent path over all timesteps.
    pub fn path(&self, agent: usize) -> Vec<VertexId> {
        self.configs.iter().map(|c| c[agent]).collect()
    }

    pub fn paths(&self) -> Vec<Vec<VertexId>> {
        (0..self.num_agents()).map(|i| self.path(i)).collect()
    }

    /// Travel time of each agent: the first timestep from which it stays at
    /// its final vertex for good.
    pub fn travel_times(&self) -> Vec<usize> {
        let Some(last) = self.configs.last() else {
            return Vec::new();
        };
        (0..last.len())
            .map(|i| {
                let goal = last[i];
                self.configs
                    .iter()
                    .rposition(|c| c[i] != goal)
                    .map_or(0, |t| t + 1)
            })
            .collect()
    }

    /// Sum of travel times.
    pub fn flowtime(&self) -> u64 {
        self.travel_times().iter().map(|&t| t as u64).sum()
    }

    /// Per-agent paths truncated after each agent's final arrival.
    pub fn trimmed_paths(&self) -> Vec<Vec<VertexId>> {
        self.travel_times()
            .iter()
            .enumerate()
            .map(|(i, &t)| self.configs[..=t].iter().map(|c| c[i]).collect())
            .collect()
    }

    /// Drops trailing configurations in which nobody moves.
    pub fn trim_tail(&mut self) {
        while self.configs.len() >= 2
            && self.configs[self.configs.len() - 1] == self.configs[self.configs.len() - 2]
        {
            self.configs.pop();
        }
    }
}
