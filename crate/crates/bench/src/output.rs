//! Solution, heatmap and histogram files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lacam_lg::{validate, Configuration, Grid, Instance, Solution, VertexId, Violation};
use serde::{Deserialize, Serialize};

use crate::runner::{read_file, write_file, BenchError, Loaded};

/// JSON solution: one `(x, y)` list per agent covering every timestep
/// `0..=makespan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub map: String,
    pub n: usize,
    pub seed: u64,
    pub flowtime: u64,
    pub paths: Vec<Vec<(usize, usize)>>,
}

impl SolutionFile {
    pub fn new(map: &str, seed: u64, instance: &Instance, solution: &Solution) -> Self {
        let grid = instance.grid();
        Self {
            map: map.to_owned(),
            n: instance.num_agents(),
            seed,
            flowtime: solution.flowtime(),
            paths: solution
                .paths()
                .iter()
                .map(|p| p.iter().map(|&v| grid.coords(v)).collect())
                .collect(),
        }
    }

    /// One `agent_id:(x,y),(x,y),...` line per agent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, path) in self.paths.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for (k, (x, y)) in path.iter().enumerate() {
                let sep = if k == 0 { "" } else { "," };
                let _ = write!(out, "{sep}({x},{y})");
            }
            out.push('\n');
        }
        out
    }
}

fn is_text_path(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("txt")
}

/// Writes JSON, or the text format when the extension is `.txt`.
pub fn write_solution(path: &Path, file: &SolutionFile) -> Result<(), BenchError> {
    let body = if is_text_path(path) {
        file.to_text()
    } else {
        serde_json::to_string(file).expect("solution serializes") + "\n"
    };
    write_file(path, body.as_bytes())
}

fn parse_text_paths(text: &str) -> Result<Vec<Vec<(usize, usize)>>, String> {
    let mut paths = Vec::new();
    for (k, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let (id, rest) = line
            .split_once(':')
            .ok_or_else(|| format!("line {}: missing ':'", k + 1))?;
        if id.trim().parse::<usize>().ok() != Some(k) {
            return Err(format!("line {}: expected agent id {k}", k + 1));
        }
        let mut path = Vec::new();
        for cell in rest.split("),") {
            let cell = cell.trim().trim_start_matches('(').trim_end_matches(')');
            let (x, y) = cell
                .split_once(',')
                .ok_or_else(|| format!("line {}: bad cell {cell:?}", k + 1))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("line {}: bad coordinate {s:?}", k + 1))
            };
            path.push((num(x)?, num(y)?));
        }
        paths.push(path);
    }
    Ok(paths)
}

/// Reads either solution format and converts it to configurations on
/// `grid`. Shorter paths are padded with their last vertex.
pub fn read_solution(path: &Path, grid: &Grid) -> Result<Solution, BenchError> {
    let text = read_file(path)?;
    let bad = |reason: String| BenchError::SolutionFormat {
        path: path.to_owned(),
        reason,
    };
    let cells = if text.trim_start().starts_with('{') {
        serde_json::from_str::<SolutionFile>(&text)
            .map_err(|e| bad(e.to_string()))?
            .paths
    } else {
        parse_text_paths(&text).map_err(bad)?
    };
    if cells.is_empty() || cells.iter().any(Vec::is_empty) {
        return Err(bad("every agent needs at least one position".into()));
    }
    let mut paths: Vec<Vec<VertexId>> = Vec::with_capacity(cells.len());
    for (i, p) in cells.iter().enumerate() {
        let mut out = Vec::with_capacity(p.len());
        for &(x, y) in p {
            out.push(
                grid.vertex_at(x, y)
                    .ok_or_else(|| bad(format!("agent {i}: ({x},{y}) is not a free cell")))?,
            );
        }
        paths.push(out);
    }
    let horizon = paths.iter().map(Vec::len).max().unwrap_or(1);
    let configs = (0..horizon)
        .map(|t| Configuration::new(paths.iter().map(|p| p[t.min(p.len() - 1)]).collect()))
        .collect();
    Ok(Solution::new(configs))
}

/// Validates a solution file against the first `n` records of `scen`,
/// where `n` is the number of agents in the file.
pub fn validate_solution_file(
    map: &Path,
    scen: &Path,
    solution: &Path,
) -> Result<Result<(), Violation>, BenchError> {
    let loaded = Loaded::read(map, &[scen.to_owned()])?;
    let sol = read_solution(solution, &loaded.grid)?;
    let instance = loaded.instance(0, sol.num_agents(), scen)?;
    Ok(validate(&instance, &sol))
}

/// `<prefix>-<suffix>.<ext>`, keeping the prefix's directory.
pub(crate) fn prefixed(prefix: &Path, suffix: &str, ext: &str) -> PathBuf {
    let base = prefix.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    prefix.with_file_name(format!("{base}-{suffix}.{ext}"))
}

/// Visit counts as a `height x width` CSV grid; obstacle cells are empty.
pub fn heatmap_csv(grid: &Grid, visits: &[u32]) -> String {
    let mut out = String::new();
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            if x > 0 {
                out.push(',');
            }
            if let Some(v) = grid.vertex_at(x, y) {
                let _ = write!(out, "{}", visits[v as usize]);
            }
        }
        out.push('\n');
    }
    out
}

/// `visits,vertices`: how many vertices were used exactly `visits` times.
pub fn histogram_csv(visits: &[u32]) -> String {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in visits {
        *counts.entry(c).or_default() += 1;
    }
    let mut out = String::from("visits,vertices\n");
    for (c, k) in counts {
        let _ = writeln!(out, "{c},{k}");
    }
    out
}

pub(crate) fn write_heatmap(
    prefix: &Path,
    suffix: &str,
    grid: &Grid,
    visits: &[u32],
) -> Result<Vec<PathBuf>, BenchError> {
    let grid_path = prefixed(prefix, suffix, "csv");
    let hist_path = prefixed(prefix, &format!("{suffix}-hist"), "csv");
    write_file(&grid_path, heatmap_csv(grid, visits).as_bytes())?;
    write_file(&hist_path, histogram_csv(visits).as_bytes())?;
    Ok(vec![grid_path, hist_path])
}
