//! Four-connected grid graphs read from MovingAI `.map` files.

use std::fmt::Write as _;

use thiserror::Error;

/// Dense id of a passable cell.
pub type VertexId = u32;

/// Sentinel for "no vertex".
pub const NO_VERTEX: VertexId = VertexId::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: {reason}")]
    Header { line: usize, reason: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown map character {ch:?}")]
    UnknownCell { line: usize, ch: char },
    #[error("line {line}: expected {expected} map rows, found {found}")]
    RowCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unexpected content after the last map row")]
    TrailingContent { line: usize },
    #[error("map has no passable cells")]
    NoPassableCells,
}

/// Immutable grid graph. Vertices are the passable cells, numbered in
/// row-major order; edges join horizontally or vertically adjacent cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    cell_to_vertex: Vec<VertexId>,
    vertex_to_cell: Vec<u32>,
    adj_offsets: Vec<u32>,
    adj: Vec<VertexId>,
}

impl Grid {
    /// Builds a grid from a row-major passability mask.
    pub fn from_mask(width: usize, height: usize, passable: &[bool]) -> Result<Self, MapError> {
        assert_eq!(passable.len(), width * height, "mask size mismatch");
        let mut cell_to_vertex = vec![NO_VERTEX; width * height];
        let mut vertex_to_cell = Vec::new();
        for (cell, &open) in passable.iter().enumerate() {
            if open {
                cell_to_vertex[cell] = vertex_to_cell.len() as VertexId;
                vertex_to_cell.push(cell as u32);
            }
        }
        if vertex_to_cell.is_empty() {
            return Err(MapError::NoPassableCells);
        }

        let mut adj_offsets = Vec::with_capacity(vertex_to_cell.len() + 1);
        let mut adj = Vec::with_capacity(vertex_to_cell.len() * 4);
        adj_offsets.push(0);
        for &cell in &vertex_to_cell {
            let (x, y) = (cell as usize % width, cell as usize / width);
            // left, right, up, down
            let candidates = [
                (x > 0).then(|| cell as usize - 1),
                (x + 1 < width).then(|| cell as usize + 1),
                (y > 0).then(|| cell as usize - width),
                (y + 1 < height).then(|| cell as usize + width),
            ];
            for c in candidates.into_iter().flatten() {
                if cell_to_vertex[c] != NO_VERTEX {
                    adj.push(cell_to_vertex[c]);
                }
            }
            adj_offsets.push(adj.len() as u32);
        }

        Ok(Self {
            width,
            height,
            cell_to_vertex,
            vertex_to_cell,
            adj_offsets,
            adj,
        })
    }

    /// Parses the contents of a MovingAI `.map` file.
    pub fn parse_map(text: &str) -> Result<Self, MapError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let mut width = None;
        let mut height = None;
        let mut last_line = 0;

        loop {
            let Some((line, content)) = lines.next() else {
                return Err(MapError::Header {
                    line: last_line + 1,
                    reason: "missing `map` marker".into(),
                });
            };
            last_line = line;
            let content = content.trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            let key = parts.next().unwrap_or_default();
            match key {
                "map" => break,
                "type" => {}
                "height" | "width" => {
                    let value = parts
                        .next()
                        .and_then(|v| v.parse::<usize>().ok())
                        .filter(|&v| v > 0)
                        .ok_or_else(|| MapError::Header {
                            line,
                            reason: format!("invalid {key} value"),
                        })?;
                    if key == "height" {
                        height = Some(value);
                    } else {
                        width = Some(value);
                    }
                }
                other => {
                    return Err(MapError::Header {
                        line,
                        reason: format!("unexpected header entry {other:?}"),
                    })
                }
            }
        }

        let (Some(width), Some(height)) = (width, height) else {
            return Err(MapError::Header {
                line: last_line,
                reason: "header must declare both height and width".into(),
            });
        };

        let mut passable = Vec::with_capacity(width * height);
        let mut rows = 0;
        for (line, content) in lines.by_ref() {
            last_line = line;
            let found = content.chars().count();
            if found != width {
                return Err(MapError::RowLength {
                    line,
                    expected: width,
                    found,
                });
            }
            for ch in content.chars() {
                passable.push(match ch {
                    '.' | 'G' => true,
                    '@' | 'T' | 'O' | 'S' | 'W' => false,
                    _ => return Err(MapError::UnknownCell { line, ch }),
                });
            }
            rows += 1;
            if rows == height {
                break;
            }
        }
        if rows < height {
            return Err(MapError::RowCount {
                line: last_line,
                expected: height,
                found: rows,
            });
        }
        if let Some((line, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(MapError::TrailingContent { line });
        }

        Self::from_mask(width, height, &passable)
    }

    /// Renders the grid back into `.map` text (`.` passable, `@` blocked).
    pub fn to_map_string(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 40);
        let _ = writeln!(
            out,
            "type octile\nheight {}\nwidth {}\nmap",
            self.height, self.width
        );
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_passable(x, y) { '.' } else { '@' });
            }
            out.push('\n');
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_to_cell.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn is_passable(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.cell_to_vertex[y * self.width + x] != NO_VERTEX
    }

    /// Vertex at column `x`, row `y`, if that cell is passable.
    pub fn vertex_at(&self, x: usize, y: usize) -> Option<VertexId> {
        if x >= self.width || y >= self.height {
            return None;
        }
        let v = self.cell_to_vertex[y * self.width + x];
        (v != NO_VERTEX).then_some(v)
    }

    /// `(x, y)` = (column, row) of a vertex.
    pub fn coords(&self, v: VertexId) -> (usize, usize) {
        let cell = self.vertex_to_cell[v as usize] as usize;
        (cell % self.width, cell / self.width)
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let lo = self.adj_offsets[v as usize] as usize;
        let hi = self.adj_offsets[v as usize + 1] as usize;
        &self.adj[lo..hi]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        (self.adj_offsets[v as usize + 1] - self.adj_offsets[v as usize]) as usize
    }

    /// Position of `u` in `neighbors(v)`.
    #[inline]
    pub fn neighbor_index(&self, v: VertexId, u: VertexId) -> Option<usize> {
        self.neighbors(v).iter().position(|&x| x == u)
    }

    #[inline]
    pub fn are_adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).contains(&v)
    }

    /// Iterator over all vertex ids.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.num_vertices() as VertexId
    }
}
