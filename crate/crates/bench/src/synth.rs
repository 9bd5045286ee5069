//! Seeded generators for benchmark-like maps and scenarios, used when the
//! MovingAI files are not available locally.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::str::FromStr;

use lacam_lg::Grid;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Map families with a synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFamily {
    /// `random-W-H-P`: `P` percent of cells blocked uniformly at random.
    Random {
        width: usize,
        height: usize,
        percent: usize,
    },
    /// `maze-W-H-C`: a perfect maze with corridors `C` cells wide and
    /// one-cell walls.
    Maze {
        width: usize,
        height: usize,
        corridor: usize,
    },
}

impl MapFamily {
    pub fn name(&self) -> String {
        match *self {
            Self::Random {
                width,
                height,
                percent,
            } => format!("random-{width}-{height}-{percent}"),
            Self::Maze {
                width,
                height,
                corridor,
            } => format!("maze-{width}-{height}-{corridor}"),
        }
    }

    /// Map for this family. The same seed always gives the same map.
    pub fn generate(&self, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h, mask) = match *self {
            Self::Random {
                width,
                height,
                percent,
            } => (width, height, random_mask(&mut rng, width, height, percent)),
            Self::Maze {
                width,
                height,
                corridor,
            } => (width, height, maze_mask(&mut rng, width, height, corridor)),
        };
        Grid::from_mask(w, h, &mask).expect("generated mask matches its dimensions")
    }
}

impl FromStr for MapFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('-').collect();
        let bad = || format!("unknown map family {s:?} (expected random-W-H-P or maze-W-H-C)");
        if parts.len() != 4 {
            return Err(bad());
        }
        let nums: Vec<usize> = parts[1..]
            .iter()
            .map(|p| p.parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let (width, height) = (nums[0], nums[1]);
        if width == 0 || height == 0 {
            return Err(bad());
        }
        match parts[0] {
            "random" if nums[2] < 100 => Ok(Self::Random {
                width,
                height,
                percent: nums[2],
            }),
            "maze" if nums[2] > 0 => Ok(Self::Maze {
                width,
                height,
                corridor: nums[2],
            }),
            _ => Err(bad()),
        }
    }
}

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, percent: usize) -> Vec<bool> {
    let cells = w * h;
    let blocked = (cells * percent + 50) / 100;
    let mut order: Vec<usize> = (0..cells).collect();
    order.shuffle(rng);
    let mut mask = vec![true; cells];
    for &c in &order[..blocked] {
        mask[c] = false;
    }
    mask
}

fn maze_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, corridor: usize) -> Vec<bool> {
    let pitch = corridor + 1;
    // room index along one axis; the last room absorbs the remainder
    let rooms = |len: usize| len.div_ceil(pitch).max(1);
    let (rx, ry) = (rooms(w), rooms(h));
    let is_wall = |p: usize, len: usize| p % pitch == corridor && p / pitch + 1 < rooms(len);
    let mut mask = vec![true; w * h];
    for y in 0..h {
        for x in 0..w {
            if is_wall(x, w) || is_wall(y, h) {
                mask[y * w + x] = false;
            }
        }
    }

    // randomized depth-first spanning tree over rooms
    let mut visited = vec![false; rx * ry];
    let mut stack = vec![rng.random_range(0..rx * ry)];
    visited[stack[0]] = true;
    while let Some(&room) = stack.last() {
        let (cx, cy) = (room % rx, room / rx);
        let mut options = Vec::with_capacity(4);
        if cx > 0 {
            options.push(room - 1);
        }
        if cx + 1 < rx {
            options.push(room + 1);
        }
        if cy > 0 {
            options.push(room - rx);
        }
        if cy + 1 < ry {
            options.push(room + rx);
        }
        options.retain(|&r| !visited[r]);
        let Some(&next) = options.get(rng.random_range(0..options.len().max(1))) else {
            stack.pop();
            continue;
        };
        visited[next] = true;
        stack.push(next);
        let (a, b) = (room.min(next), room.max(next));
        let (ax, ay) = (a % rx, a / rx);
        if b == a + 1 {
            let x = ax * pitch + corridor;
            for y in ay * pitch..((ay + 1) * pitch).min(h) {
                if !is_wall(y, h) {
                    mask[y * w + x] = true;
                }
            }
        } else {
            let y = ay * pitch + corridor;
            for x in ax * pitch..((ax + 1) * pitch).min(w) {
                if !is_wall(x, w) {
                    mask[y * w + x] = true;
                }
            }
        }
    }
    mask
}

/// Vertices of the largest connected component, ascending.
pub fn largest_component(grid: &Grid) -> Vec<u32> {
    let nv = grid.num_vertices();
    let mut label = vec![usize::MAX; nv];
    let mut best: Vec<u32> = Vec::new();
    for root in 0..nv {
        if label[root] != usize::MAX {
            continue;
        }
        let mut comp = vec![root as u32];
        label[root] = root;
        let mut queue = VecDeque::from([root as u32]);
        while let Some(v) = queue.pop_front() {
            for &u in grid.neighbors(v) {
                if label[u as usize] == usize::MAX {
                    label[u as usize] = root;
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

/// A version-1 `.scen` text with up to `records` start/goal pairs drawn
/// from the largest component. Starts are pairwise distinct, as are goals.
pub fn scenario_text(grid: &Grid, map_name: &str, records: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comp = largest_component(grid);
    let n = records.min(comp.len());
    let mut starts = comp.clone();
    let mut goals = comp;
    starts.shuffle(&mut rng);
    goals.shuffle(&mut rng);
    let dist = |s: u32, g: u32| lacam_lg::dist::bfs_from(grid, [g])[s as usize];

    let mut out = String::from("version 1\n");
    for i in 0..n {
        let (sx, sy) = grid.coords(starts[i]);
        let (gx, gy) = grid.coords(goals[i]);
        let _ = writeln!(
            out,
            "{}\t{}.map\t{}\t{}\t{sx}\t{sy}\t{gx}\t{gy}\t{}",
            i / 10,
            map_name,
            grid.width(),
            grid.height(),
            dist(starts[i], goals[i]),
        );
    }
    out
}

/// Writes `<family>.map` and `<family>-random-<k>.scen` for `k` in
/// `1..=instances` into `dir`, returning the map path and scenario paths.
pub fn write_benchmark(
    dir: &std::path::Path,
    family: MapFamily,
    instances: usize,
    records: usize,
    seed: u64,
) -> std::io::Result<(std::path::PathBuf, Vec<std::path::PathBuf>)> {
    std::fs::create_dir_all(dir)?;
    let name = family.name();
    let grid = family.generate(seed);
    let map_path = dir.join(format!("{name}.map"));
    std::fs::write(&map_path, grid.to_map_string())?;
    let mut scens = Vec::with_capacity(instances);
    for k in 1..=instances {
        let path = dir.join(format!("{name}-random-{k}.scen"));
        let scen_seed = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
        std::fs::write(&path, scenario_text(&grid, &name, records, scen_seed))?;
        scens.push(path);
    }
    Ok((map_path, scens))
}
